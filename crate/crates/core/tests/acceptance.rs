//! Acceptance suite. Runs every criterion in order, prints one line per
//! criterion and exits non-zero if any of them fails.
//!
//! `cargo test -p m2h --test acceptance` runs everything, including the
//! full default ten-seed experiment. Pass criterion numbers as arguments
//! to run a subset, e.g. `cargo test -p m2h --test acceptance -- 2 5`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{assert_conserved, best_permutation_tv, disjoint_topics, grad, two_topic_corpus};
use m2h::adversarial::{sample_smoothed_label, Generator, LabelSmoothing, Source};
use m2h::classifier::{real_and_max_test, EpochMetrics};
use m2h::corpus::{apply_asr_noise, word_error_rate, Channel, Document, NoiseModel, Split};
use m2h::harness::{
    embed_corpus, render_report, run_experiment, run_system, seed_inference, train_embedders,
    ExperimentConfig, ReportFormat, System,
};
use m2h::lda::{GibbsSampler, LdaParams};
use m2h::seeded_rng;
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> (bool, String) {
    (elapsed < limit, format!("{:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()))
}

fn gradient_suite() -> Check {
    let start = Instant::now();
    let errors = [
        ("classifier", grad::worst(grad::classifier_instance)),
        ("generator", grad::worst(grad::generator_instance)),
        ("GAN discriminator", grad::worst(grad::gan_discriminator_instance)),
        ("M2H discriminator", grad::worst(grad::m2h_discriminator_instance)),
    ];
    let (fast, time) = within(start.elapsed(), Duration::from_secs(60));
    let accurate = errors.iter().all(|&(_, e)| e < grad::TOLERANCE);
    let worst: Vec<String> = errors.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    ensure(
        accurate && fast,
        format!("{} instances each, worst: {}; {time}", grad::INSTANCES, worst.join(", ")),
    )
}

fn lda_oracle() -> Check {
    let start = Instant::now();
    let vocab = 100;
    let docs = two_topic_corpus(200, 60, vocab, 11);
    let refs: Vec<&Document> = docs.iter().collect();
    let mut sampler = GibbsSampler::new(&refs, vocab, LdaParams::with_topics(2), 0).map_err(|e| e.to_string())?;
    assert_conserved(&sampler, &refs, vocab);
    for _ in 0..200 {
        sampler.sweep();
        assert_conserved(&sampler, &refs, vocab);
    }
    let model = sampler.to_model().map_err(|e| e.to_string())?;
    let tv = best_permutation_tv(&model, &disjoint_topics(vocab));
    let (fast, time) = within(start.elapsed(), Duration::from_secs(60));
    ensure(
        tv < 0.1 && fast,
        format!("max per-topic TV {tv:.4} (< 0.1), counts conserved over 200 sweeps; {time}"),
    )
}

fn embedding_contract() -> Check {
    let config = ExperimentConfig::default();
    let corpus = config.corpus().map_err(|e| e.to_string())?;
    let seed = 0;
    let inference = seed_inference(config.inference(), seed);
    let embed = || -> m2h::Result<_> {
        let (trs, asr) = train_embedders(&corpus, &config.lda, seed)?;
        let mut vectors = Vec::new();
        for split in Split::ALL {
            vectors.extend(trs.embed_all(&corpus.documents(split, Channel::Trs), &inference)?);
            vectors.extend(asr.embed_all(&corpus.documents(split, Channel::Asr), &inference)?);
        }
        Ok(vectors)
    };
    let a = embed().map_err(|e| e.to_string())?;
    let b = embed().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut shaped = true;
    for v in &a {
        shaped &= v.len() == 250 && v.blocks(25).count() == 10;
        for block in v.blocks(25) {
            worst = worst.max((block.iter().sum::<f64>() - 1.0).abs());
        }
    }
    let identical = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| {
            x.as_slice().iter().zip(y.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits())
        });
    ensure(
        shaped && worst <= 1e-9 && identical,
        format!(
            "{} embeddings of length 250, max block-sum deviation {worst:.1e}, bit-identical rerun: {identical}",
            a.len()
        ),
    )
}

fn noise_calibration() -> Check {
    let model = NoiseModel {
        substitution_rate: 0.30,
        deletion_rate: 0.15,
        insertion_rate: 0.05,
        confusion_bias: 0.0,
    };
    let mut rates = Vec::new();
    for seed in 0..10u64 {
        let mut rng = seeded_rng(seed);
        let (mut edits, mut tokens) = (0.0, 0usize);
        for i in 0..100 {
            let doc = Document::new(
                format!("d{i}"),
                0,
                Channel::Trs,
                (0..100).map(|_| rng.random_range(0..2000)).collect(),
            );
            let out = apply_asr_noise(&doc, &model, 2000, None, &mut rng).map_err(|e| e.to_string())?;
            edits += word_error_rate(&doc.tokens, &out.document.tokens).map_err(|e| e.to_string())? * doc.len() as f64;
            tokens += doc.len();
        }
        rates.push(edits / tokens as f64);
    }
    let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().copied().fold(0.0, f64::max);
    ensure(
        lo >= 0.47 && hi <= 0.53,
        format!("10 corpora of 10^4 tokens, measured WER in [{lo:.4}, {hi:.4}] (target [0.47, 0.53])"),
    )
}

fn label_smoothing() -> Check {
    let smoothing = LabelSmoothing::default();
    let mut rng = seeded_rng(5);
    let mut parts = Vec::new();
    let mut ok = true;
    for (source, [lo, hi], target) in [
        (Source::Real, [0.0, 0.7], 0.35),
        (Source::Fake, [0.7, 1.0], 0.85),
    ] {
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_smoothed_label(&mut rng, source, &smoothing).value)
            .collect();
        let inside = draws.iter().all(|&v| lo <= v && v <= hi);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        ok &= inside && (mean - target).abs() <= 0.01;
        parts.push(format!("{source:?} mean {mean:.4} in range {inside}"));
    }
    ensure(ok, format!("10^5 draws each: {}", parts.join(", ")))
}

fn directional_reproduction() -> Check {
    let config = ExperimentConfig::default();
    let start = Instant::now();
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    let (fast, time) = within(start.elapsed(), Duration::from_secs(15 * 60));
    if !report.is_complete() {
        return Err(format!("{} seed(s) failed", report.failed.len()));
    }
    let agg = |s: System| report.system(s).and_then(|r| r.aggregate).ok_or(format!("no aggregate for {s}"));
    let (trs, asr, m2h) = (agg(System::DnnTrs)?, agg(System::DnnAsr)?, agg(System::M2hGan)?);
    let gan = agg(System::Gan)?;
    let order = trs.real_test > m2h.real_test && m2h.real_test >= asr.real_test;
    let stable = m2h.std_real_test <= asr.std_real_test;
    let text = render_report(&report, ReportFormat::Text).map_err(|e| e.to_string())?;
    print!("{}", String::from_utf8_lossy(&text));
    ensure(
        order && stable && fast,
        format!(
            "{} seeds, real test TRS {:.2} > M2H {:.2} >= ASR {:.2} (GAN {:.2}): {order}; std M2H {:.4} <= ASR {:.4}: {stable}; {time}",
            trs.seeds,
            100.0 * trs.real_test,
            100.0 * m2h.real_test,
            100.0 * asr.real_test,
            100.0 * gan.real_test,
            m2h.std_real_test,
            asr.std_real_test
        ),
    )
}

fn discriminator_semantics() -> Check {
    let config = ExperimentConfig::default();
    let corpus = config.corpus().map_err(|e| e.to_string())?;
    let seed = 0;
    let run = || -> m2h::Result<(f64, f64)> {
        let (trs, asr) = train_embedders(&corpus, &config.lda, seed)?;
        let data = embed_corpus::<f64>(&corpus, &trs, &asr, &seed_inference(config.inference(), seed))?.standardized()?;
        let outcome = run_system(System::M2hGan, &data, &config, seed)?;
        let d = outcome.adversarial.expect("M2H-GAN trains a discriminator").discriminator;
        let fresh = Generator::<f64>::init(config.gan.generator_spec(250), &mut seeded_rng(12345))?;
        let fakes = fresh.generate_batch(data.test.asr.view())?;
        let judged = d.judges_fake(fakes.view())?;
        let fake_rate = judged.iter().filter(|&&f| f).count() as f64 / judged.len() as f64;
        let predicted = d.classify_theme(data.test.trs.view())?;
        let hits = predicted.iter().zip(&data.test.labels).filter(|(p, l)| p == l).count();
        Ok((fake_rate, hits as f64 / data.test.labels.len() as f64))
    };
    let (fake_rate, theme_accuracy) = run().map_err(|e| e.to_string())?;
    ensure(
        fake_rate > 0.8 && theme_accuracy > 0.225,
        format!(
            "default corpus, seed 0: FAKE top-1 on fresh generator {fake_rate:.3} (> 0.8), theme accuracy on TRS test {theme_accuracy:.3} (> 0.225)"
        ),
    )
}

fn metric_selection() -> Check {
    let history = |dev: &[f64], test: &[f64]| -> Vec<EpochMetrics> {
        dev.iter()
            .zip(test)
            .enumerate()
            .map(|(epoch, (&dev_accuracy, &test_accuracy))| EpochMetrics {
                epoch,
                train_loss: 0.0,
                dev_accuracy,
                test_accuracy,
            })
            .collect()
    };
    let example = real_and_max_test(&history(&[0.5, 0.9, 0.7], &[0.6, 0.8, 0.95])).map_err(|e| e.to_string())?;
    let mut rng = seeded_rng(8);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let dev: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let test: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let (real, max) = real_and_max_test(&history(&dev, &test)).map_err(|e| e.to_string())?;
        if max < real {
            violations += 1;
        }
    }
    ensure(
        example == (0.8, 0.95) && violations == 0,
        format!("example gives {example:?} (expected (0.8, 0.95)); max < real on {violations}/1000 random histories"),
    )
}

fn determinism() -> Check {
    let mut config = ExperimentConfig::default();
    config.run.seeds = vec![0, 1];
    config.lda.runs = 4;
    config.lda.iterations = 60;
    config.gan.epochs = 8;
    config.classifier.epochs = 15;
    let a = render_report(&run_experiment(&config).map_err(|e| e.to_string())?, ReportFormat::Json).map_err(|e| e.to_string())?;
    let b = render_report(&run_experiment(&config).map_err(|e| e.to_string())?, ReportFormat::Json).map_err(|e| e.to_string())?;
    ensure(
        a == b,
        format!("two runs of a 2-seed experiment, JSON reports of {} bytes identical: {}", a.len(), a == b),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("gradient suite", gradient_suite),
        ("LDA oracle", lda_oracle),
        ("embedding contract", embedding_contract),
        ("noise calibration", noise_calibration),
        ("label smoothing", label_smoothing),
        ("directional reproduction", directional_reproduction),
        ("M2H discriminator semantics", discriminator_semantics),
        ("metric selection", metric_selection),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {number} PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {number} FAIL {name}: {detail}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
