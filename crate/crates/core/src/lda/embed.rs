use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{infer_topics, train_lda, InferenceConfig, LdaConfig, LdaModel};
use crate::corpus::{Channel, Document};
use crate::{derive_seed, Error, Result, Scalar};

/// Concatenated topic proportions of every run of an [`Embedder`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        EmbeddingVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Per-run topic blocks.
    pub fn blocks(&self, topics: usize) -> std::slice::Chunks<'_, f64> {
        self.0.chunks(topics)
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        let na: f64 = self.0.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = other.0.iter().map(|b| b * b).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    pub fn distance(&self, other: &EmbeddingVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Independently seeded LDA runs over one channel's training documents.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedder {
    channel: Channel,
    runs: Vec<LdaModel>,
}

impl Embedder {
    pub fn new(channel: Channel, runs: Vec<LdaModel>) -> Result<Self> {
        let Some(first) = runs.first() else {
            return Err(Error::Config("embedder needs at least one LDA run".into()));
        };
        if runs
            .iter()
            .any(|r| r.params() != first.params() || r.vocab_size() != first.vocab_size())
        {
            return Err(Error::Config(
                "embedder runs disagree on topics, priors or vocabulary".into(),
            ));
        }
        Ok(Embedder { channel, runs })
    }

    /// Trains `config.runs` LDA models on `docs`; run `r` uses the seed
    /// `derive_seed(seed, r)`, and runs are kept in seed order.
    pub fn train(
        docs: &[&Document],
        vocab_size: usize,
        channel: Channel,
        config: &LdaConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(doc) = docs.iter().find(|d| d.channel != channel) {
            return Err(Error::InvalidInput(format!(
                "document `{}` is {} but the embedder is {channel}",
                doc.id, doc.channel
            )));
        }
        let params = config.params();
        let runs = (0..config.runs)
            .into_par_iter()
            .map(|r| train_lda(docs, vocab_size, params, config.iterations, derive_seed(seed, r as u64)))
            .collect::<Result<Vec<_>>>()?;
        Embedder::new(channel, runs)
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn runs(&self) -> &[LdaModel] {
        &self.runs
    }

    pub fn topics(&self) -> usize {
        self.runs[0].topics()
    }

    pub fn dim(&self) -> usize {
        self.runs.len() * self.topics()
    }

    /// Embeds one document of this embedder's channel.
    ///
    /// The fold-in seed of run `r` mixes `inference.seed`, the document id
    /// and `r`, so a document's embedding does not depend on which other
    /// documents are embedded alongside it.
    pub fn embed(&self, doc: &Document, inference: &InferenceConfig) -> Result<EmbeddingVector> {
        if doc.channel != self.channel {
            return Err(Error::InvalidInput(format!(
                "document `{}` is {} but the embedder is {}",
                doc.id, doc.channel, self.channel
            )));
        }
        self.embed_any(doc, inference)
    }

    /// Like [`Embedder::embed`] without the channel check, for cross-channel
    /// probes such as projecting ASR text into the TRS topic space.
    pub fn embed_any(&self, doc: &Document, inference: &InferenceConfig) -> Result<EmbeddingVector> {
        let doc_seed = derive_seed(inference.seed, fnv1a(doc.id.as_bytes()));
        let mut values = Vec::with_capacity(self.dim());
        for (r, model) in self.runs.iter().enumerate() {
            let theta = infer_topics(
                model,
                doc,
                inference.iterations,
                inference.burn_in,
                derive_seed(doc_seed, r as u64),
            )?;
            values.extend(theta);
        }
        Ok(EmbeddingVector(values))
    }

    pub fn embed_all(&self, docs: &[&Document], inference: &InferenceConfig) -> Result<Vec<EmbeddingVector>> {
        docs.par_iter().map(|d| self.embed(d, inference)).collect()
    }
}

/// Stacks embeddings as the rows of a matrix.
pub fn stack_embeddings<F: Scalar>(vectors: &[EmbeddingVector]) -> Result<Array2<F>> {
    let dim = vectors.first().map_or(0, EmbeddingVector::len);
    let mut out = Array2::zeros((vectors.len(), dim));
    for (mut row, v) in out.axis_iter_mut(Axis(0)).zip(vectors) {
        if v.len() != dim {
            return Err(Error::dim("embedding", dim, v.len()));
        }
        row.iter_mut().zip(v.as_slice()).for_each(|(r, &x)| *r = F::lit(x));
    }
    Ok(out)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
