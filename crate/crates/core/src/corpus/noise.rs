//! Simulated ASR channel: independent per-token substitutions and deletions
//! plus per-gap insertions.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Channel, Document};
use crate::{Error, Result};

/// Error rates of the simulated recognizer.
///
/// To first order the word error rate of the channel is
/// `substitution_rate + deletion_rate + insertion_rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub substitution_rate: f64,
    pub deletion_rate: f64,
    pub insertion_rate: f64,
    /// Odds of drawing a substitute from the word's confusion set rather
    /// than uniformly from the vocabulary. Zero means uniform substitutions.
    #[serde(default)]
    pub confusion_bias: f64,
}

impl NoiseModel {
    pub const fn identity() -> Self {
        NoiseModel {
            substitution_rate: 0.0,
            deletion_rate: 0.0,
            insertion_rate: 0.0,
            confusion_bias: 0.0,
        }
    }

    /// Splits a target error rate 60/30/10 into substitutions, deletions and
    /// insertions.
    pub fn with_wer(wer: f64) -> Self {
        NoiseModel {
            substitution_rate: 0.6 * wer,
            deletion_rate: 0.3 * wer,
            insertion_rate: 0.1 * wer,
            confusion_bias: 0.0,
        }
    }

    pub fn expected_wer(&self) -> f64 {
        self.substitution_rate + self.deletion_rate + self.insertion_rate
    }

    pub fn is_identity(&self) -> bool {
        self.expected_wer() == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("substitution_rate", self.substitution_rate),
            ("deletion_rate", self.deletion_rate),
            ("insertion_rate", self.insertion_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("{name} = {r} is outside [0, 1]")));
            }
        }
        if self.expected_wer() > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "noise rates sum to {} > 1",
                self.expected_wer()
            )));
        }
        if !(self.confusion_bias >= 0.0 && self.confusion_bias.is_finite()) {
            return Err(Error::Config(format!(
                "confusion_bias = {} must be finite and non-negative",
                self.confusion_bias
            )));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::with_wer(0.5)
    }
}

/// One noise model per corpus split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitNoise {
    pub train: NoiseModel,
    pub dev: NoiseModel,
    pub test: NoiseModel,
}

impl SplitNoise {
    pub fn uniform(model: NoiseModel) -> Self {
        SplitNoise {
            train: model,
            dev: model,
            test: model,
        }
    }

    pub fn get(&self, split: super::Split) -> &NoiseModel {
        match split {
            super::Split::Train => &self.train,
            super::Split::Dev => &self.dev,
            super::Split::Test => &self.test,
        }
    }
}

impl Default for SplitNoise {
    /// Training, development and test error rates of 45.8%, 59.3% and 58.0%.
    fn default() -> Self {
        SplitNoise {
            train: NoiseModel::with_wer(0.458),
            dev: NoiseModel::with_wer(0.593),
            test: NoiseModel::with_wer(0.580),
        }
    }
}

/// Pre-assigned acoustically confusable neighbours for every word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionTable {
    neighbours: Vec<Vec<u32>>,
}

impl ConfusionTable {
    pub fn random<R: Rng + ?Sized>(vocab_size: usize, per_word: usize, rng: &mut R) -> Self {
        let neighbours = (0..vocab_size)
            .map(|w| {
                if vocab_size < 2 {
                    return Vec::new();
                }
                (0..per_word)
                    .map(|_| other_word(w as u32, vocab_size, rng))
                    .collect()
            })
            .collect();
        ConfusionTable { neighbours }
    }

    pub fn neighbours(&self, word: u32) -> &[u32] {
        self.neighbours
            .get(word as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Result of passing a transcript through the noise channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoiseOutcome {
    pub document: Document,
    /// Every token was deleted and one original token was kept so the
    /// output stays non-empty.
    pub truncated: bool,
}

/// Produces the ASR twin of a TRS document.
pub fn apply_asr_noise<R: Rng + ?Sized>(
    doc: &Document,
    model: &NoiseModel,
    vocab_size: usize,
    confusions: Option<&ConfusionTable>,
    rng: &mut R,
) -> Result<NoiseOutcome> {
    model.validate()?;
    if doc.channel != Channel::Trs {
        return Err(Error::InvalidInput(format!(
            "document `{}` is already on the ASR channel",
            doc.id
        )));
    }
    if doc.tokens.is_empty() {
        return Err(Error::InvalidInput(format!("document `{}` has no tokens", doc.id)));
    }
    if vocab_size == 0 {
        return Err(Error::Config("empty vocabulary".into()));
    }

    let substitute_cut = model.deletion_rate + model.substitution_rate;
    let confusable_prob = model.confusion_bias / (1.0 + model.confusion_bias);
    let mut out = Vec::with_capacity(doc.tokens.len() + 4);

    for &token in &doc.tokens {
        if model.insertion_rate > 0.0 && rng.random::<f64>() < model.insertion_rate {
            out.push(rng.random_range(0..vocab_size as u32));
        }
        let u: f64 = rng.random();
        if u < model.deletion_rate {
            continue;
        }
        if u < substitute_cut && vocab_size > 1 {
            let table = confusions.map(|c| c.neighbours(token)).unwrap_or(&[]);
            let replacement = if !table.is_empty() && rng.random::<f64>() < confusable_prob {
                *table.choose(rng).expect("non-empty confusion set")
            } else {
                other_word(token, vocab_size, rng)
            };
            out.push(replacement);
        } else {
            out.push(token);
        }
    }
    if model.insertion_rate > 0.0 && rng.random::<f64>() < model.insertion_rate {
        out.push(rng.random_range(0..vocab_size as u32));
    }

    let truncated = out.is_empty();
    if truncated {
        out.push(*doc.tokens.choose(rng).expect("non-empty document"));
    }
    Ok(NoiseOutcome {
        document: Document::new(doc.id.clone(), doc.theme, Channel::Asr, out),
        truncated,
    })
}

/// Uniform draw from the vocabulary excluding `word`.
fn other_word<R: Rng + ?Sized>(word: u32, vocab_size: usize, rng: &mut R) -> u32 {
    let r = rng.random_range(0..vocab_size as u32 - 1);
    if r >= word {
        r + 1
    } else {
        r
    }
}
