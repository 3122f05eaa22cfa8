use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversarial::AdversarialConfig;
use crate::classifier::ClassifierConfig;
use crate::corpus::{generate_synthetic_corpus, load_corpus, Channel, CorpusConfig, ParallelCorpus};
use crate::lda::{InferenceConfig, LdaConfig};
use crate::{Error, Result};

/// One row of the results table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum System {
    #[serde(rename = "DNN-TRS")]
    DnnTrs,
    #[serde(rename = "DNN-ASR")]
    DnnAsr,
    #[serde(rename = "GAN")]
    Gan,
    #[serde(rename = "M2H-GAN")]
    M2hGan,
}

impl System {
    pub const ALL: [System; 4] = [System::DnnTrs, System::DnnAsr, System::Gan, System::M2hGan];

    pub fn name(self) -> &'static str {
        match self {
            System::DnnTrs => "DNN-TRS",
            System::DnnAsr => "DNN-ASR",
            System::Gan => "GAN",
            System::M2hGan => "M2H-GAN",
        }
    }

    /// Channel the classifier is evaluated on.
    pub fn data(self) -> Channel {
        match self {
            System::DnnTrs => Channel::Trs,
            _ => Channel::Asr,
        }
    }

    /// Fixed per-system seed stream, independent of which systems run.
    pub(crate) fn stream(self) -> u64 {
        match self {
            System::DnnTrs => 10,
            System::DnnAsr => 11,
            System::Gan => 12,
            System::M2hGan => 13,
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        System::ALL
            .into_iter()
            .find(|sys| sys.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown system `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Seeds, systems and corpus source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub systems: Vec<System>,
    /// Seed of the synthetic corpus, shared by every run seed.
    pub corpus_seed: u64,
    /// Load this corpus file instead of generating one.
    pub corpus_path: Option<PathBuf>,
    pub precision: Precision,
    /// Standardize each channel's embeddings with training-split statistics
    /// before the adversarial and classifier stages.
    pub standardize: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: (0..10).collect(),
            systems: System::ALL.to_vec(),
            corpus_seed: 2024,
            corpus_path: None,
            precision: Precision::F64,
            standardize: true,
        }
    }
}

/// Complete experiment description, read from TOML.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub corpus: CorpusConfig,
    pub lda: LdaConfig,
    pub gan: AdversarialConfig,
    pub classifier: ClassifierConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        // Relative corpus paths are resolved against the config file.
        if let (Some(corpus), Some(dir)) = (&config.run.corpus_path, path.parent()) {
            if corpus.is_relative() {
                config.run.corpus_path = Some(dir.join(corpus));
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn inference(&self) -> &InferenceConfig {
        &self.lda.inference
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.seeds.is_empty() {
            return Err(Error::Config("at least one run seed is required".into()));
        }
        let mut seen = self.run.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.run.seeds.len() {
            return Err(Error::Config("run seeds must be distinct".into()));
        }
        let mut systems = self.run.systems.clone();
        systems.sort_unstable();
        systems.dedup();
        if systems.len() != self.run.systems.len() {
            return Err(Error::Config("systems must be distinct".into()));
        }
        match &self.run.corpus_path {
            Some(path) if !path.exists() => {
                return Err(Error::Config(format!("corpus file {} does not exist", path.display())));
            }
            Some(_) => {}
            None => self.corpus.validate()?,
        }
        self.lda.validate()?;
        self.gan.validate()?;
        self.classifier.validate()
    }

    /// Loads the configured corpus file or generates the synthetic one.
    pub fn corpus(&self) -> Result<ParallelCorpus> {
        match &self.run.corpus_path {
            Some(path) => load_corpus(path),
            None => generate_synthetic_corpus(&self.corpus, self.run.corpus_seed),
        }
    }
}
