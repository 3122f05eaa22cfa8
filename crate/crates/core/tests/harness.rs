use m2h::classifier::Standardizer;
use m2h::corpus::{Channel, Document, NoiseModel, Split, SplitNoise, ThemeSpec};
use m2h::harness::{
    embed_corpus, render_report, run_experiment, run_system, seed_inference, train_embedders, ExperimentConfig,
    Precision, ReportFormat, RunReport, System,
};
use m2h::lda::stack_embeddings;
use ndarray::Array2;

/// 80 training pairs, small networks and short schedules.
fn tiny_config() -> ExperimentConfig {
    let mut config = ExperimentConfig::default();
    config.corpus.themes = (0..8).map(|i| ThemeSpec::new(&format!("t{i}"), 10, 3, 4)).collect();
    config.corpus.vocab_size = 300;
    config.corpus.doc_len_min = 20;
    config.corpus.doc_len_max = 40;
    config.lda.runs = 3;
    config.lda.topics = 5;
    config.lda.iterations = 15;
    config.lda.inference.iterations = 10;
    config.lda.inference.burn_in = 4;
    config.gan.epochs = 3;
    config.gan.generator_hidden = 16;
    config.gan.discriminator_hidden = 8;
    config.classifier.hidden = vec![16, 16];
    config.classifier.epochs = 5;
    config.run.seeds = vec![1];
    config
}

#[test]
fn smoke_run_has_four_rows() {
    let report = run_experiment(&tiny_config()).unwrap();
    assert!(report.is_complete());
    assert_eq!(report.systems.len(), 4);
    for (row, system) in report.systems.iter().zip(System::ALL) {
        assert_eq!(row.system, system);
        assert_eq!(row.per_seed.len(), 1);
        let m = row.per_seed[0];
        for v in [m.dev, m.real_test, m.max_test] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(m.max_test >= m.real_test);
        assert_eq!(row.aggregate.unwrap().std_real_test, 0.0);
    }
    let text = String::from_utf8(render_report(&report, ReportFormat::Text).unwrap()).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().nth(5).unwrap().starts_with("M2H-GAN"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let mut config = tiny_config();
    config.run.seeds = vec![4, 5];
    let a = render_report(&run_experiment(&config).unwrap(), ReportFormat::Json).unwrap();
    let b = render_report(&run_experiment(&config).unwrap(), ReportFormat::Json).unwrap();
    assert_eq!(a, b);
    let parsed = RunReport::from_json(std::str::from_utf8(&a).unwrap()).unwrap();
    assert_eq!(render_report(&parsed, ReportFormat::Json).unwrap(), a);
}

#[test]
fn dropping_a_system_leaves_the_others_unchanged() {
    let mut config = tiny_config();
    config.run.seeds = vec![2, 3];
    let full = run_experiment(&config).unwrap();
    config.run.systems = vec![System::M2hGan, System::DnnTrs];
    let partial = run_experiment(&config).unwrap();
    for row in &partial.systems {
        assert_eq!(row, full.system(row.system).unwrap());
    }
}

#[test]
fn single_precision_runs() {
    let mut config = tiny_config();
    config.run.precision = Precision::F32;
    let report = run_experiment(&config).unwrap();
    assert!(report.is_complete());
    assert_eq!(report.systems.len(), 4);
}

#[test]
fn corpus_file_can_replace_generation() {
    let config = tiny_config();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    m2h::corpus::save_corpus(&config.corpus().unwrap(), &path).unwrap();
    let mut from_file = config.clone();
    from_file.run.corpus_path = Some(path);
    from_file.corpus.vocab_size = 7; // ignored when a file is given
    assert_eq!(run_experiment(&from_file).unwrap(), run_experiment(&config).unwrap());
}

/// Identical channels make DNN-ASR a re-run of DNN-TRS with other seeds.
#[test]
fn noiseless_channels_give_equal_baselines() {
    let mut config = ExperimentConfig::default();
    config.corpus.noise = SplitNoise::uniform(NoiseModel::identity());
    config.corpus.doc_len_max = 60;
    config.lda.runs = 4;
    config.lda.iterations = 50;
    config.lda.inference.iterations = 20;
    config.lda.inference.burn_in = 5;
    config.run.systems = vec![System::DnnTrs, System::DnnAsr];
    let report = run_experiment(&config).unwrap();
    let mean = |s| report.system(s).unwrap().aggregate.unwrap().real_test;
    let (trs, asr) = (mean(System::DnnTrs), mean(System::DnnAsr));
    assert!((trs - asr).abs() <= 0.03, "DNN-TRS {trs} vs DNN-ASR {asr}");
}

fn mean_distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).rows().into_iter().map(|r| r.dot(&r).sqrt()).sum::<f64>() / a.nrows() as f64
}

/// Mean distance of each row to the training TRS centroid of its theme.
fn theme_distance(x: &Array2<f64>, labels: &[usize], train: &Array2<f64>, train_labels: &[usize]) -> f64 {
    let classes = train_labels.iter().max().unwrap() + 1;
    let mut centroids = Array2::<f64>::zeros((classes, train.ncols()));
    let mut counts = vec![0.0; classes];
    for (row, &l) in train.rows().into_iter().zip(train_labels) {
        let mut c = centroids.row_mut(l);
        c += &row;
        counts[l] += 1.0;
    }
    for (mut c, n) in centroids.rows_mut().into_iter().zip(counts) {
        c /= n;
    }
    let targets = Array2::from_shape_fn(x.raw_dim(), |(i, j)| centroids[[labels[i], j]]);
    mean_distance(x, &targets)
}

/// The identity baseline re-embeds the ASR text with the TRS embedder, so
/// both sides live in the same (standardized TRS) space. The generator is
/// never shown pairs, so the comparison is made at the theme level; the
/// document-level distances are printed for reference.
#[test]
fn m2h_generator_moves_asr_toward_trs_themes() {
    let config = ExperimentConfig::default();
    let corpus = config.corpus().unwrap();
    let seed = 0;
    let (trs, asr) = train_embedders(&corpus, &config.lda, seed).unwrap();
    let inference = seed_inference(config.inference(), seed);
    let raw = embed_corpus::<f64>(&corpus, &trs, &asr, &inference).unwrap();
    let scaler = Standardizer::fit(raw.train.trs.view()).unwrap();

    let as_trs: Vec<Document> = corpus
        .documents(Split::Test, Channel::Asr)
        .into_iter()
        .map(|d| Document::new(d.id.clone(), d.theme, Channel::Trs, d.tokens.clone()))
        .collect();
    let refs: Vec<&Document> = as_trs.iter().collect();
    let projected = scaler
        .transform(stack_embeddings(&trs.embed_all(&refs, &inference).unwrap()).unwrap())
        .unwrap();

    let data = raw.standardized().unwrap();
    let outcome = run_system(System::M2hGan, &data, &config, seed).unwrap();
    let mapped = outcome.adversarial.unwrap().generator.generate_batch(data.test.asr.view()).unwrap();

    let theme = |x: &Array2<f64>| theme_distance(x, &data.test.labels, &data.train.trs, &data.train.labels);
    println!(
        "paired distance: generator {:.3}, identity {:.3}; theme distance: generator {:.3}, identity {:.3}",
        mean_distance(&mapped, &data.test.trs),
        mean_distance(&projected, &data.test.trs),
        theme(&mapped),
        theme(&projected)
    );
    assert!(theme(&mapped) < theme(&projected));
}
