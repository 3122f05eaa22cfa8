use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which distribution a discriminator input came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Real,
    Fake,
}

/// A soft discriminator target for one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedLabel {
    pub value: f64,
    pub source: Source,
}

/// Closed target intervals. The discriminator's scalar output estimates
/// `p(fake)`, so real samples sit low and generated ones high.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSmoothing {
    pub real: [f64; 2],
    pub fake: [f64; 2],
}

impl Default for LabelSmoothing {
    fn default() -> Self {
        LabelSmoothing {
            real: [0.0, 0.7],
            fake: [0.7, 1.0],
        }
    }
}

impl LabelSmoothing {
    pub fn interval(&self, source: Source) -> [f64; 2] {
        match source {
            Source::Real => self.real,
            Source::Fake => self.fake,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for [lo, hi] in [self.real, self.fake] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::Config(format!(
                    "label interval [{lo}, {hi}] is not inside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Uniform draw from the source's interval. A zero-width interval yields
/// its endpoint.
pub fn sample_smoothed_label<R: Rng + ?Sized>(
    rng: &mut R,
    source: Source,
    smoothing: &LabelSmoothing,
) -> SmoothedLabel {
    let [lo, hi] = smoothing.interval(source);
    // `lo + u (hi - lo)` can round past `hi`; clamp keeps draws inside.
    let value = (lo + rng.random::<f64>() * (hi - lo)).clamp(lo, hi);
    SmoothedLabel { value, source }
}
