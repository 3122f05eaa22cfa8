//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! A document is represented by the concatenated topic proportions of
//! several independently seeded LDA runs ([`Embedder`]). One embedder is
//! trained per transcription channel.

mod embed;
mod gibbs;
mod infer;
mod io;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use embed::{stack_embeddings, Embedder, EmbeddingVector};
pub use gibbs::{train_lda, GibbsSampler};
pub use infer::infer_topics;
pub use io::{load_embedder, load_embeddings, load_model, save_embedder, save_embeddings, save_model, EmbeddingRecord};

pub const DEFAULT_TOPICS: usize = 25;
pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_BETA: f64 = 0.01;

/// Symmetric document-topic prior `50 / T`.
pub fn default_alpha(topics: usize) -> f64 {
    50.0 / topics as f64
}

/// Dirichlet priors and topic count of one LDA run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl LdaParams {
    /// `alpha = 50 / T`, `beta = 0.01`.
    pub fn with_topics(topics: usize) -> Self {
        LdaParams {
            topics,
            alpha: default_alpha(topics),
            beta: DEFAULT_BETA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::Config("LDA needs at least one topic".into()));
        }
        if self.topics > u16::MAX as usize {
            return Err(Error::Config(format!("too many topics ({})", self.topics)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite())
        {
            return Err(Error::Config(format!(
                "priors must be positive and finite (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams::with_topics(DEFAULT_TOPICS)
    }
}

/// Fold-in sampling schedule for held-out documents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            iterations: 50,
            burn_in: 20,
            seed: 0,
        }
    }
}

/// Everything needed to train and apply one channel's embedder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub topics: usize,
    /// Defaults to `50 / topics` when absent.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub runs: usize,
    pub iterations: usize,
    pub inference: InferenceConfig,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: DEFAULT_TOPICS,
            alpha: None,
            beta: DEFAULT_BETA,
            runs: DEFAULT_RUNS,
            iterations: 200,
            inference: InferenceConfig::default(),
        }
    }
}

impl LdaConfig {
    pub fn params(&self) -> LdaParams {
        LdaParams {
            topics: self.topics,
            alpha: self.alpha.unwrap_or_else(|| default_alpha(self.topics)),
            beta: self.beta,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.runs * self.topics
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if self.runs == 0 {
            return Err(Error::Config("embedder needs at least one LDA run".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("LDA training needs at least one sweep".into()));
        }
        if self.inference.iterations <= self.inference.burn_in {
            return Err(Error::Config(format!(
                "fold-in iterations ({}) must exceed burn-in ({})",
                self.inference.iterations, self.inference.burn_in
            )));
        }
        Ok(())
    }
}

/// Topic-word statistics of one trained LDA run.
///
/// Counts are immutable once built; the smoothed topic-word probabilities
/// used by fold-in are derived from them at construction.
#[derive(Clone, Debug)]
pub struct LdaModel {
    params: LdaParams,
    vocab_size: usize,
    /// Row-major `topics x vocab_size`.
    topic_word_counts: Vec<u32>,
    topic_totals: Vec<u64>,
    /// Word-major `vocab_size x topics` table of `(n_tw + beta) / (n_t + V beta)`.
    word_topic_probs: Vec<f64>,
}

impl PartialEq for LdaModel {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.vocab_size == other.vocab_size
            && self.topic_word_counts == other.topic_word_counts
            && self.topic_totals == other.topic_totals
    }
}

impl LdaModel {
    /// Builds a model from a row-major `topics x vocab_size` count matrix.
    pub fn from_counts(params: LdaParams, vocab_size: usize, topic_word_counts: Vec<u32>) -> Result<Self> {
        params.validate()?;
        if vocab_size == 0 {
            return Err(Error::Config("empty vocabulary".into()));
        }
        let t = params.topics;
        if topic_word_counts.len() != t * vocab_size {
            return Err(Error::dim("topic-word counts", t * vocab_size, topic_word_counts.len()));
        }
        let topic_totals: Vec<u64> = topic_word_counts
            .chunks(vocab_size)
            .map(|row| row.iter().map(|&c| c as u64).sum())
            .collect();

        let vb = vocab_size as f64 * params.beta;
        let mut word_topic_probs = vec![0.0; vocab_size * t];
        for (topic, row) in topic_word_counts.chunks(vocab_size).enumerate() {
            let denom = topic_totals[topic] as f64 + vb;
            for (w, &c) in row.iter().enumerate() {
                word_topic_probs[w * t + topic] = (c as f64 + params.beta) / denom;
            }
        }
        Ok(LdaModel {
            params,
            vocab_size,
            topic_word_counts,
            topic_totals,
            word_topic_probs,
        })
    }

    pub fn params(&self) -> LdaParams {
        self.params
    }

    pub fn topics(&self) -> usize {
        self.params.topics
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn topic_word_counts(&self) -> &[u32] {
        &self.topic_word_counts
    }

    pub fn topic_row(&self, topic: usize) -> &[u32] {
        &self.topic_word_counts[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    /// Smoothed `p(word | topic)` for every topic.
    pub(crate) fn word_probs(&self, word: usize) -> &[f64] {
        let t = self.params.topics;
        &self.word_topic_probs[word * t..(word + 1) * t]
    }

    /// Posterior mean topic-word distribution of one topic.
    pub fn topic_distribution(&self, topic: usize) -> Vec<f64> {
        (0..self.vocab_size)
            .map(|w| self.word_probs(w)[topic])
            .collect()
    }
}
