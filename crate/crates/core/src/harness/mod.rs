//! Multi-seed experiment: two-channel embedders, the four systems, and
//! Table-style aggregation.

mod config;
mod report;

pub use config::{ExperimentConfig, Precision, RunConfig, System};
pub use report::{
    aggregate, render_report, render_table, Aggregate, FailedSeed, ReportFormat, RunReport, SeedMetrics,
    SystemReport,
};

use ndarray::Array2;
use rayon::prelude::*;

use crate::adversarial::{train_gan, train_m2h_gan, TrainedGan};
use crate::classifier::{map_features, select_epoch, train_classifier, LabeledSet, Standardizer, TrainedClassifier};
use crate::corpus::{Channel, ParallelCorpus, Split};
use crate::lda::{stack_embeddings, Embedder, InferenceConfig, LdaConfig};
use crate::{derive_seed, Result, Scalar};

/// Embeddings of one split on both channels.
#[derive(Clone, Debug)]
pub struct EmbeddedSplit<F> {
    pub trs: Array2<F>,
    pub asr: Array2<F>,
    pub labels: Vec<usize>,
}

impl<F> EmbeddedSplit<F> {
    pub fn channel(&self, channel: Channel) -> &Array2<F> {
        match channel {
            Channel::Trs => &self.trs,
            Channel::Asr => &self.asr,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddedCorpus<F> {
    pub train: EmbeddedSplit<F>,
    pub dev: EmbeddedSplit<F>,
    pub test: EmbeddedSplit<F>,
    pub classes: usize,
}

impl<F> EmbeddedCorpus<F> {
    pub fn split(&self, split: Split) -> &EmbeddedSplit<F> {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }
}

/// Seed of a channel's embedder under run seed `seed`.
pub fn embedder_seed(channel: Channel, seed: u64) -> u64 {
    match channel {
        Channel::Trs => derive_seed(seed, 1),
        Channel::Asr => derive_seed(seed, 2),
    }
}

/// Seed of a system's adversarial stage under run seed `seed`.
pub fn adversarial_seed(system: System, seed: u64) -> u64 {
    derive_seed(derive_seed(seed, system.stream()), 0)
}

/// Seed of a system's classifier under run seed `seed`.
pub fn classifier_seed(system: System, seed: u64) -> u64 {
    derive_seed(derive_seed(seed, system.stream()), 1)
}

/// Trains one channel's embedder on the training split.
pub fn train_embedder(corpus: &ParallelCorpus, channel: Channel, lda: &LdaConfig, seed: u64) -> Result<Embedder> {
    Embedder::train(
        &corpus.documents(Split::Train, channel),
        corpus.vocab_size(),
        channel,
        lda,
        embedder_seed(channel, seed),
    )
}

/// Trains the TRS and ASR embedders on the training split.
pub fn train_embedders(corpus: &ParallelCorpus, lda: &LdaConfig, seed: u64) -> Result<(Embedder, Embedder)> {
    Ok((
        train_embedder(corpus, Channel::Trs, lda, seed)?,
        train_embedder(corpus, Channel::Asr, lda, seed)?,
    ))
}

/// Fold-in schedule with its seed tied to the run seed.
pub fn seed_inference(inference: &InferenceConfig, seed: u64) -> InferenceConfig {
    InferenceConfig {
        seed: derive_seed(seed, 3),
        ..*inference
    }
}

/// Embeds every split, each channel with its own embedder.
pub fn embed_corpus<F: Scalar>(
    corpus: &ParallelCorpus,
    trs: &Embedder,
    asr: &Embedder,
    inference: &InferenceConfig,
) -> Result<EmbeddedCorpus<F>> {
    let split = |split: Split| -> Result<EmbeddedSplit<F>> {
        let embed = |e: &Embedder, channel| -> Result<Array2<F>> {
            stack_embeddings(&e.embed_all(&corpus.documents(split, channel), inference)?)
        };
        Ok(EmbeddedSplit {
            trs: embed(trs, Channel::Trs)?,
            asr: embed(asr, Channel::Asr)?,
            labels: corpus.split(split).map(|p| p.trs.theme).collect(),
        })
    };
    Ok(EmbeddedCorpus {
        train: split(Split::Train)?,
        dev: split(Split::Dev)?,
        test: split(Split::Test)?,
        classes: corpus.n_themes(),
    })
}

impl<F: Scalar> EmbeddedCorpus<F> {
    /// Standardizes each channel with statistics of its training split.
    pub fn standardized(self) -> Result<Self> {
        let trs = Standardizer::fit(self.train.trs.view())?;
        let asr = Standardizer::fit(self.train.asr.view())?;
        let apply = |s: EmbeddedSplit<F>| -> Result<EmbeddedSplit<F>> {
            Ok(EmbeddedSplit {
                trs: trs.transform(s.trs)?,
                asr: asr.transform(s.asr)?,
                labels: s.labels,
            })
        };
        Ok(EmbeddedCorpus {
            train: apply(self.train)?,
            dev: apply(self.dev)?,
            test: apply(self.test)?,
            classes: self.classes,
        })
    }
}

/// Everything produced by one system under one seed.
#[derive(Clone, Debug)]
pub struct SystemOutcome<F> {
    pub metrics: SeedMetrics,
    pub adversarial: Option<TrainedGan<F>>,
    pub classifier: TrainedClassifier<F>,
}

/// Trains one system on precomputed embeddings. The system's seeds derive
/// from `seed` and a fixed per-system stream, so results do not depend on
/// which other systems run.
pub fn run_system<F: Scalar>(
    system: System,
    data: &EmbeddedCorpus<F>,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<SystemOutcome<F>> {
    let adversarial = match system {
        System::DnnTrs | System::DnnAsr => None,
        System::Gan | System::M2hGan => {
            let gan = crate::adversarial::AdversarialConfig {
                seed: adversarial_seed(system, seed),
                ..config.gan
            };
            let (z, x) = (data.train.asr.view(), data.train.trs.view());
            Some(if system == System::Gan {
                train_gan(z, x, &gan)?
            } else {
                // Pairs share their theme, so both label lists coincide.
                train_m2h_gan(z, x, &data.train.labels, &data.train.labels, data.classes, &gan)?
            })
        }
    };
    let generator = adversarial.as_ref().map(|g| &g.generator);
    let features = |split: &EmbeddedSplit<F>| map_features(generator, split.channel(system.data()).clone());
    let (train, dev, test) = (features(&data.train)?, features(&data.dev)?, features(&data.test)?);
    let classifier = train_classifier(
        LabeledSet::new(train.view(), &data.train.labels)?,
        LabeledSet::new(dev.view(), &data.dev.labels)?,
        LabeledSet::new(test.view(), &data.test.labels)?,
        data.classes,
        &config.classifier,
        classifier_seed(system, seed),
    )?;
    let sel = select_epoch(&classifier.history)?;
    Ok(SystemOutcome {
        metrics: SeedMetrics {
            seed,
            epoch: sel.epoch,
            dev: sel.dev,
            real_test: sel.real_test,
            max_test: sel.max_test,
        },
        adversarial,
        classifier,
    })
}

type SeedResult = std::result::Result<Vec<SeedMetrics>, FailedSeed>;

fn run_seed<F: Scalar>(corpus: &ParallelCorpus, config: &ExperimentConfig, seed: u64) -> SeedResult {
    let fail = |stage: &str| {
        let stage = stage.to_string();
        move |e: crate::Error| FailedSeed {
            seed,
            stage,
            message: e.to_string(),
        }
    };
    let (trs, asr) = train_embedders(corpus, &config.lda, seed).map_err(fail("lda"))?;
    let inference = seed_inference(config.inference(), seed);
    let mut data = embed_corpus::<F>(corpus, &trs, &asr, &inference).map_err(fail("embedding"))?;
    if config.run.standardize {
        data = data.standardized().map_err(fail("embedding"))?;
    }
    config
        .run
        .systems
        .par_iter()
        .map(|&system| {
            run_system(system, &data, config, seed)
                .map(|o| o.metrics)
                .map_err(fail(system.name()))
        })
        .collect()
}

/// Runs every configured system for every seed and aggregates the results.
/// A failing stage aborts only its seed, which is listed in
/// [`RunReport::failed`] and excluded from all aggregates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let corpus = config.corpus()?;
    match config.run.precision {
        Precision::F32 => run_on::<f32>(&corpus, config),
        Precision::F64 => run_on::<f64>(&corpus, config),
    }
}

/// [`run_experiment`] on an already materialized corpus, at scalar type `F`.
pub fn run_on<F: Scalar>(corpus: &ParallelCorpus, config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let outcomes: Vec<SeedResult> = config
        .run
        .seeds
        .par_iter()
        .map(|&seed| run_seed::<F>(corpus, config, seed))
        .collect();

    let mut failed = Vec::new();
    let mut per_system: Vec<Vec<SeedMetrics>> = vec![Vec::new(); config.run.systems.len()];
    for outcome in outcomes {
        match outcome {
            Ok(metrics) => {
                for (bucket, m) in per_system.iter_mut().zip(metrics) {
                    bucket.push(m);
                }
            }
            Err(f) => failed.push(f),
        }
    }
    let systems = config
        .run
        .systems
        .iter()
        .zip(per_system)
        .map(|(&system, per_seed)| SystemReport {
            system,
            data: system.data(),
            aggregate: aggregate(&per_seed).ok(),
            per_seed,
        })
        .collect();
    Ok(RunReport {
        seeds: config.run.seeds.clone(),
        systems,
        failed,
    })
}
