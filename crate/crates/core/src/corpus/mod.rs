//! Paired TRS/ASR document corpora.
//!
//! A [`ParallelCorpus`] holds one clean transcript and one noisy twin per
//! conversation. Both channels index into the same vocabulary, so token ids
//! are comparable across channels.

mod io;
mod noise;
mod synth;
mod wer;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{load_corpus, save_corpus, CORPUS_FORMAT, CORPUS_VERSION};
pub use noise::{apply_asr_noise, ConfusionTable, NoiseModel, NoiseOutcome, SplitNoise};
pub use synth::{generate_synthetic_corpus, CorpusConfig, ThemeSpec};
pub use wer::{align, corpus_wer, measure_wer, word_error_rate, EditCounts};

/// Transcription channel of a document.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Manual (human) transcription.
    Trs,
    /// Automatic speech recognition output.
    Asr,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Trs => "trs",
            Channel::Asr => "asr",
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.as_str().to_ascii_uppercase())
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trs" => Ok(Channel::Trs),
            "asr" => Ok(Channel::Asr),
            other => Err(Error::InvalidInput(format!("unknown channel `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split `{other}`"))),
        }
    }
}

/// A tokenized conversation transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub theme: usize,
    pub channel: Channel,
    pub tokens: Vec<u32>,
}

impl Document {
    pub fn new(id: impl Into<String>, theme: usize, channel: Channel, tokens: Vec<u32>) -> Self {
        Document {
            id: id.into(),
            theme,
            channel,
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Checks the token and theme ranges against a vocabulary and theme count.
    pub fn validate(&self, vocab_size: usize, n_themes: usize) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::InvalidInput(format!("document `{}` has no tokens", self.id)));
        }
        if let Some(&bad) = self.tokens.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(Error::InvalidInput(format!(
                "document `{}`: token index {bad} out of range for vocabulary of {vocab_size}",
                self.id
            )));
        }
        if self.theme >= n_themes {
            return Err(Error::InvalidInput(format!(
                "document `{}`: theme {} out of range for {n_themes} themes",
                self.id, self.theme
            )));
        }
        Ok(())
    }
}

/// Clean transcript and its noisy twin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentPair {
    pub trs: Document,
    pub asr: Document,
    pub split: Split,
}

impl DocumentPair {
    pub fn get(&self, channel: Channel) -> &Document {
        match channel {
            Channel::Trs => &self.trs,
            Channel::Asr => &self.asr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelCorpus {
    vocabulary: Vec<String>,
    theme_names: Vec<String>,
    pairs: Vec<DocumentPair>,
}

impl ParallelCorpus {
    pub fn new(
        vocabulary: Vec<String>,
        theme_names: Vec<String>,
        pairs: Vec<DocumentPair>,
    ) -> Result<Self> {
        if vocabulary.is_empty() {
            return Err(Error::Config("empty vocabulary".into()));
        }
        if theme_names.is_empty() {
            return Err(Error::Config("no themes".into()));
        }
        for pair in &pairs {
            if pair.trs.id != pair.asr.id || pair.trs.theme != pair.asr.theme {
                return Err(Error::InvalidInput(format!(
                    "pair `{}`/`{}` disagrees on id or theme",
                    pair.trs.id, pair.asr.id
                )));
            }
            if pair.trs.channel != Channel::Trs || pair.asr.channel != Channel::Asr {
                return Err(Error::InvalidInput(format!(
                    "pair `{}` has mislabelled channels",
                    pair.trs.id
                )));
            }
            pair.trs.validate(vocabulary.len(), theme_names.len())?;
            pair.asr.validate(vocabulary.len(), theme_names.len())?;
        }
        Ok(ParallelCorpus {
            vocabulary,
            theme_names,
            pairs,
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn theme_names(&self) -> &[String] {
        &self.theme_names
    }

    pub fn n_themes(&self) -> usize {
        self.theme_names.len()
    }

    pub fn pairs(&self) -> &[DocumentPair] {
        &self.pairs
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &DocumentPair> {
        self.pairs.iter().filter(move |p| p.split == split)
    }

    /// Documents of one channel in one split, in corpus order.
    pub fn documents(&self, split: Split, channel: Channel) -> Vec<&Document> {
        self.split(split).map(|p| p.get(channel)).collect()
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.split(split).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, theme: usize, channel: Channel, tokens: Vec<u32>) -> Document {
        Document::new(id, theme, channel, tokens)
    }

    #[test]
    fn rejects_mismatched_pair() {
        let pair = DocumentPair {
            trs: doc("a", 0, Channel::Trs, vec![0]),
            asr: doc("a", 1, Channel::Asr, vec![0]),
            split: Split::Train,
        };
        let err = ParallelCorpus::new(vec!["x".into()], vec!["t0".into(), "t1".into()], vec![pair]);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_out_of_range_token() {
        let d = doc("a", 0, Channel::Trs, vec![3]);
        assert!(d.validate(3, 1).is_err());
        assert!(d.validate(4, 1).is_ok());
        assert!(doc("b", 0, Channel::Trs, vec![]).validate(4, 1).is_err());
    }

    #[test]
    fn channel_parsing() {
        assert_eq!("TRS".parse::<Channel>().unwrap(), Channel::Trs);
        assert_eq!("asr".parse::<Channel>().unwrap(), Channel::Asr);
        assert!("foo".parse::<Channel>().is_err());
    }
}
