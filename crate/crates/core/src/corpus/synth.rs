//! Synthetic parallel corpus shaped like a call-centre theme dataset.
//!
//! Each theme owns a word distribution drawn from a symmetric Dirichlet over
//! the whole vocabulary; documents mix it with a shared background
//! distribution, so themes overlap through common words. The ASR twin of
//! every clean transcript goes through the split's noise model.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::noise::{apply_asr_noise, ConfusionTable, SplitNoise};
use super::{Channel, Document, DocumentPair, ParallelCorpus, Split};
use crate::{derive_seed, seeded_rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThemeSpec {
    pub name: String,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl ThemeSpec {
    pub fn new(name: &str, train: usize, dev: usize, test: usize) -> Self {
        ThemeSpec {
            name: name.into(),
            train,
            dev,
            test,
        }
    }

    fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub themes: Vec<ThemeSpec>,
    pub vocab_size: usize,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    /// Inverse concentration of the per-theme Dirichlet. Larger values give
    /// peakier, less overlapping themes; `inf` gives one dedicated word per
    /// theme.
    pub sharpness: f64,
    /// Concentration of the shared background Dirichlet.
    pub background_concentration: f64,
    /// Weight of the background distribution in every document.
    pub background_mix: f64,
    /// Upper bound of the per-document weight given to a second, randomly
    /// chosen theme. Each document draws its weight uniformly in
    /// `[0, theme_overlap]`; above 0.5 the second theme dominates the text.
    pub theme_overlap: f64,
    pub noise: SplitNoise,
    /// Size of each word's confusion set (used when `confusion_bias > 0`).
    pub confusions_per_word: usize,
}

impl Default for CorpusConfig {
    /// Eight themes with a 740 / 175 / 327 split.
    fn default() -> Self {
        CorpusConfig {
            themes: vec![
                ThemeSpec::new("problems of itinerary", 145, 44, 67),
                ThemeSpec::new("lost and found", 143, 33, 63),
                ThemeSpec::new("time schedules", 47, 7, 18),
                ThemeSpec::new("transportation cards", 106, 24, 47),
                ThemeSpec::new("state of the traffic", 202, 45, 90),
                ThemeSpec::new("fares", 19, 9, 11),
                ThemeSpec::new("infractions", 47, 4, 18),
                ThemeSpec::new("special offers", 31, 9, 13),
            ],
            vocab_size: 2000,
            doc_len_min: 40,
            doc_len_max: 100,
            sharpness: 20.0,
            background_concentration: 1.0,
            background_mix: 0.4,
            theme_overlap: 0.55,
            noise: SplitNoise::default(),
            confusions_per_word: 3,
        }
    }
}

impl CorpusConfig {
    pub fn split_total(&self, split: Split) -> usize {
        self.themes.iter().map(|t| t.count(split)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::Config("empty vocabulary".into()));
        }
        if self.themes.is_empty() {
            return Err(Error::Config("no themes configured".into()));
        }
        for theme in &self.themes {
            if theme.train + theme.dev + theme.test == 0 {
                return Err(Error::Config(format!("theme `{}` has zero documents", theme.name)));
            }
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            return Err(Error::Config(format!(
                "document length range [{}, {}] is invalid",
                self.doc_len_min, self.doc_len_max
            )));
        }
        if !(self.sharpness > 0.0) {
            return Err(Error::Config("sharpness must be positive".into()));
        }
        if self.sharpness.is_infinite() && self.themes.len() > self.vocab_size {
            return Err(Error::Config(
                "infinite sharpness needs at least one word per theme".into(),
            ));
        }
        if !(self.background_concentration > 0.0 && self.background_concentration.is_finite()) {
            return Err(Error::Config("background_concentration must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.background_mix) {
            return Err(Error::Config("background_mix must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.theme_overlap) {
            return Err(Error::Config("theme_overlap must lie in [0, 1]".into()));
        }
        for split in Split::ALL {
            self.noise.get(split).validate()?;
        }
        Ok(())
    }
}

/// Cumulative table for repeated categorical draws.
struct Categorical {
    cumulative: Vec<f64>,
}

impl Categorical {
    fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Categorical { cumulative }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty support");
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

fn dirichlet<R: Rng + ?Sized>(concentration: f64, dim: usize, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    let mut draw: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draw.iter().sum();
    if total > 0.0 && total.is_finite() {
        draw.iter_mut().for_each(|x| *x /= total);
    } else {
        // Every coordinate underflowed: the limit is a vertex of the simplex.
        draw.iter_mut().for_each(|x| *x = 0.0);
        draw[rng.random_range(0..dim)] = 1.0;
    }
    draw
}

/// Per-theme word distributions (before background mixing).
fn theme_distributions<R: Rng + ?Sized>(config: &CorpusConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let n = config.themes.len();
    let v = config.vocab_size;
    if config.sharpness.is_infinite() {
        let mut words: Vec<usize> = (0..v).collect();
        words.shuffle(rng);
        return words[..n]
            .iter()
            .map(|&w| {
                let mut dist = vec![0.0; v];
                dist[w] = 1.0;
                dist
            })
            .collect();
    }
    (0..n)
        .map(|_| dirichlet(1.0 / config.sharpness, v, rng))
        .collect()
}

/// Builds a corpus deterministically from `seed`.
///
/// Clean text and the noise channel use separate generator streams, so the
/// TRS side of the corpus does not depend on the noise settings.
pub fn generate_synthetic_corpus(config: &CorpusConfig, seed: u64) -> Result<ParallelCorpus> {
    config.validate()?;
    let v = config.vocab_size;
    let mut text_rng = seeded_rng(derive_seed(seed, 0));
    let mut noise_rng = seeded_rng(derive_seed(seed, 1));

    let background = dirichlet(config.background_concentration, v, &mut text_rng);
    let themes = theme_distributions(config, &mut text_rng);
    let m = config.background_mix;
    let background = Categorical::new(&background);
    let samplers: Vec<Categorical> = themes.iter().map(|t| Categorical::new(t)).collect();
    let n_themes = samplers.len();

    let needs_confusions = Split::ALL
        .iter()
        .any(|&s| config.noise.get(s).confusion_bias > 0.0);
    let confusions = needs_confusions.then(|| {
        let mut rng = seeded_rng(derive_seed(seed, 2));
        ConfusionTable::random(v, config.confusions_per_word, &mut rng)
    });

    let mut pairs = Vec::new();
    for split in Split::ALL {
        let mut labels: Vec<usize> = config
            .themes
            .iter()
            .enumerate()
            .flat_map(|(k, t)| std::iter::repeat_n(k, t.count(split)))
            .collect();
        labels.shuffle(&mut text_rng);
        let noise = config.noise.get(split);
        for (j, theme) in labels.into_iter().enumerate() {
            let len = text_rng.random_range(config.doc_len_min..=config.doc_len_max);
            let (second, rho) = if config.theme_overlap > 0.0 && n_themes > 1 {
                let other = (theme + text_rng.random_range(1..n_themes)) % n_themes;
                (other, text_rng.random::<f64>() * config.theme_overlap)
            } else {
                (theme, 0.0)
            };
            let tokens: Vec<u32> = (0..len)
                .map(|_| {
                    let u: f64 = text_rng.random();
                    let source = if u < m {
                        &background
                    } else if u < m + (1.0 - m) * rho {
                        &samplers[second]
                    } else {
                        &samplers[theme]
                    };
                    source.sample(&mut text_rng) as u32
                })
                .collect();
            let trs = Document::new(format!("{}-{j:04}", split.as_str()), theme, Channel::Trs, tokens);
            let asr = apply_asr_noise(&trs, noise, v, confusions.as_ref(), &mut noise_rng)?.document;
            pairs.push(DocumentPair { trs, asr, split });
        }
    }

    let vocabulary = (0..v).map(|w| format!("w{w:04}")).collect();
    let theme_names = config.themes.iter().map(|t| t.name.clone()).collect();
    ParallelCorpus::new(vocabulary, theme_names, pairs)
}
