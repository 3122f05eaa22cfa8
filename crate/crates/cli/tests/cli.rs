use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_m2h");

const TINY: &str = r#"
[run]
seeds = [3]

[corpus]
vocab_size = 300
doc_len_min = 20
doc_len_max = 40
themes = [
  { name = "a", train = 10, dev = 3, test = 4 },
  { name = "b", train = 10, dev = 3, test = 4 },
  { name = "c", train = 10, dev = 3, test = 4 },
  { name = "d", train = 10, dev = 3, test = 4 },
  { name = "e", train = 10, dev = 3, test = 4 },
  { name = "f", train = 10, dev = 3, test = 4 },
  { name = "g", train = 10, dev = 3, test = 4 },
  { name = "h", train = 10, dev = 3, test = 4 },
]

[lda]
runs = 3
topics = 5
iterations = 15

[lda.inference]
iterations = 10
burn_in = 4

[gan]
epochs = 3
generator_hidden = 16
discriminator_hidden = 8

[classifier]
hidden = [16, 16]
epochs = 5
"#;

fn m2h(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(BIN).current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "m2h {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn staged_pipeline_matches_run_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("tiny.toml"), TINY).unwrap();
    let common = ["--config", "tiny.toml", "--seed", "3"];
    let with = |rest: &[&'static str]| -> Vec<&str> { rest.iter().copied().chain(common).collect() };

    let gen = m2h(dir, &["gen-corpus", "--config", "tiny.toml", "--out", "corpus.jsonl"]);
    assert!(stdout(&gen).contains("80 train / 24 dev / 32 test"));
    for channel in ["trs", "asr"] {
        let out = m2h(dir, &with(&["train-lda", "--corpus", "corpus.jsonl", "--channel", channel, "--out", "lda"]));
        assert!(stdout(&out).contains(&format!("embedder-{channel}.json")));
    }
    m2h(dir, &with(&["embed", "--corpus", "corpus.jsonl", "--embedder", "lda/embedder-trs.json", "--out", "trs.jsonl"]));
    m2h(dir, &with(&["embed", "--corpus", "corpus.jsonl", "--embedder", "lda/embedder-asr.json", "--out", "asr.jsonl"]));
    m2h(dir, &with(&["train-m2h", "--trs", "trs.jsonl", "--asr", "asr.jsonl", "--out", "m2h"]));
    m2h(dir, &with(&["train-gan", "--trs", "trs.jsonl", "--asr", "asr.jsonl", "--out", "gan"]));
    m2h(dir, &with(&["train-dnn", "--features", "asr.jsonl", "--generator", "m2h/generator.m2hnet", "--out", "dnn-m2h"]));
    m2h(dir, &with(&["train-dnn", "--features", "asr.jsonl", "--generator", "gan/generator.m2hnet", "--system", "GAN", "--out", "dnn-gan"]));
    m2h(dir, &with(&["train-dnn", "--features", "trs.jsonl", "--out", "dnn-trs"]));
    m2h(dir, &with(&["train-dnn", "--features", "asr.jsonl", "--out", "dnn-asr"]));

    m2h(dir, &["run-experiment", "--config", "tiny.toml", "--out", "results"]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("results/report.json")).unwrap()).unwrap();
    for (system, stage) in [("DNN-TRS", "dnn-trs"), ("DNN-ASR", "dnn-asr"), ("GAN", "dnn-gan"), ("M2H-GAN", "dnn-m2h")] {
        let row = report["systems"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["system"] == system)
            .unwrap();
        let history: Vec<m2h::classifier::EpochMetrics> =
            serde_json::from_str(&std::fs::read_to_string(dir.join(stage).join("history.json")).unwrap()).unwrap();
        let sel = m2h::classifier::select_epoch(&history).unwrap();
        let seed = &row["per_seed"][0];
        assert_eq!(seed["real_test"].as_f64().unwrap(), sel.real_test, "{system}");
        assert_eq!(seed["max_test"].as_f64().unwrap(), sel.max_test, "{system}");
    }

    let text = stdout(&m2h(dir, &["report", "--input", "results/report.json"]));
    assert_eq!(text, std::fs::read_to_string(dir.join("results/report.txt")).unwrap());
    assert!(text.starts_with("Models"));
    let json = stdout(&m2h(dir, &["report", "--input", "results/report.json", "--format", "json"]));
    assert_eq!(json, std::fs::read_to_string(dir.join("results/report.json")).unwrap());
}

#[test]
fn bad_inputs_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("bad.toml"), "[run]\nseeds = []\n").unwrap();
    let out = Command::new(BIN)
        .current_dir(dir)
        .args(["run-experiment", "--config", "bad.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    std::fs::write(dir.join("empty.jsonl"), "").unwrap();
    let out = Command::new(BIN)
        .current_dir(dir)
        .args(["train-lda", "--corpus", "empty.jsonl", "--channel", "trs", "--out", "x"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing vocabulary header"));
}
