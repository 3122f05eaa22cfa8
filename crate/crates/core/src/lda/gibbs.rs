use rand::Rng;

use super::{LdaModel, LdaParams};
use crate::corpus::Document;
use crate::{seeded_rng, Error, Result, SeedRng};

/// Collapsed Gibbs sampler state over a fixed training set.
///
/// Each sweep resamples every token's topic from
/// `(n_dt + alpha) (n_tw + beta) / (n_t + V beta)` with the token's own
/// assignment removed from the counts.
pub struct GibbsSampler<'a> {
    params: LdaParams,
    vocab_size: usize,
    docs: Vec<&'a [u32]>,
    assignments: Vec<Vec<u16>>,
    /// `docs x topics`
    doc_topic: Vec<u32>,
    /// Word-major `vocab x topics`.
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    weights: Vec<f64>,
    rng: SeedRng,
}

impl<'a> GibbsSampler<'a> {
    /// Assigns every token a uniformly random topic.
    pub fn new(docs: &[&'a Document], vocab_size: usize, params: LdaParams, seed: u64) -> Result<Self> {
        params.validate()?;
        if docs.is_empty() {
            return Err(Error::InvalidInput("LDA training needs at least one document".into()));
        }
        if vocab_size == 0 {
            return Err(Error::Config("empty vocabulary".into()));
        }
        for doc in docs {
            if let Some(&w) = doc.tokens.iter().find(|&&w| w as usize >= vocab_size) {
                return Err(Error::InvalidInput(format!(
                    "document `{}`: token {w} outside vocabulary of {vocab_size}",
                    doc.id
                )));
            }
        }

        let t = params.topics;
        let mut rng = seeded_rng(seed);
        let mut doc_topic = vec![0u32; docs.len() * t];
        let mut word_topic = vec![0u32; vocab_size * t];
        let mut topic_totals = vec![0u64; t];
        let assignments = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.tokens
                    .iter()
                    .map(|&w| {
                        let z = rng.random_range(0..t);
                        doc_topic[d * t + z] += 1;
                        word_topic[w as usize * t + z] += 1;
                        topic_totals[z] += 1;
                        z as u16
                    })
                    .collect()
            })
            .collect();

        Ok(GibbsSampler {
            params,
            vocab_size,
            docs: docs.iter().map(|d| d.tokens.as_slice()).collect(),
            assignments,
            doc_topic,
            word_topic,
            topic_totals,
            weights: vec![0.0; t],
            rng,
        })
    }

    /// One full pass over every token of every document.
    pub fn sweep(&mut self) {
        let t = self.params.topics;
        let alpha = self.params.alpha;
        let beta = self.params.beta;
        let vb = self.vocab_size as f64 * beta;
        let mut inv_totals: Vec<f64> = self.topic_totals.iter().map(|&n| 1.0 / (n as f64 + vb)).collect();

        for (d, tokens) in self.docs.iter().enumerate() {
            let dt = &mut self.doc_topic[d * t..(d + 1) * t];
            for (i, &w) in tokens.iter().enumerate() {
                let w = w as usize;
                let wt = &mut self.word_topic[w * t..(w + 1) * t];
                let old = self.assignments[d][i] as usize;
                dt[old] -= 1;
                wt[old] -= 1;
                self.topic_totals[old] -= 1;
                inv_totals[old] = 1.0 / (self.topic_totals[old] as f64 + vb);

                for (((p, &nd), &nw), &inv) in self.weights.iter_mut().zip(dt.iter()).zip(wt.iter()).zip(&inv_totals) {
                    *p = (nd as f64 + alpha) * (nw as f64 + beta) * inv;
                }
                let new = sample_index(&self.weights, self.rng.random::<f64>());

                dt[new] += 1;
                wt[new] += 1;
                self.topic_totals[new] += 1;
                inv_totals[new] = 1.0 / (self.topic_totals[new] as f64 + vb);
                self.assignments[d][i] = new as u16;
            }
        }
    }

    pub fn params(&self) -> LdaParams {
        self.params
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn doc_len(&self, doc: usize) -> usize {
        self.docs[doc].len()
    }

    pub fn doc_topic_counts(&self, doc: usize) -> &[u32] {
        let t = self.params.topics;
        &self.doc_topic[doc * t..(doc + 1) * t]
    }

    pub fn assignments(&self, doc: usize) -> &[u16] {
        &self.assignments[doc]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    pub fn word_topic_count(&self, word: usize, topic: usize) -> u32 {
        self.word_topic[word * self.params.topics + topic]
    }

    /// Freezes the current sampler state into a model.
    pub fn to_model(&self) -> Result<LdaModel> {
        let t = self.params.topics;
        let v = self.vocab_size;
        let mut counts = vec![0u32; t * v];
        for w in 0..v {
            for k in 0..t {
                counts[k * v + w] = self.word_topic[w * t + k];
            }
        }
        LdaModel::from_counts(self.params, v, counts)
    }
}

/// Index drawn from unnormalized `weights` given a uniform draw `u` in [0, 1).
pub(crate) fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut remaining = u * total;
    for (k, &w) in weights.iter().enumerate() {
        if remaining < w {
            return k;
        }
        remaining -= w;
    }
    weights.len() - 1
}

/// Trains one LDA run for `iterations` sweeps.
pub fn train_lda(
    docs: &[&Document],
    vocab_size: usize,
    params: LdaParams,
    iterations: usize,
    seed: u64,
) -> Result<LdaModel> {
    if iterations == 0 {
        return Err(Error::Config("LDA training needs at least one sweep".into()));
    }
    let mut sampler = GibbsSampler::new(docs, vocab_size, params, seed)?;
    for _ in 0..iterations {
        sampler.sweep();
    }
    sampler.to_model()
}
