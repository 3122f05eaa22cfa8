//! Adversarial mapping of ASR embeddings toward the TRS embedding space.
//!
//! Two variants share the same generator:
//!
//! - [`Variant::Gan`]: the discriminator has one sigmoid output estimating
//!   `p(fake)` and is trained on smoothed binary targets.
//! - [`Variant::M2h`]: the discriminator has `N + 1` softmax outputs, one per
//!   theme plus a FAKE class. Real TRS embeddings are classified by theme,
//!   generated ones as FAKE, and the generator is pushed toward the theme
//!   of its ASR source. The generator itself never sees a label.

mod smoothing;
mod train;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{Activation, LayerSpec, Network};
use crate::{Error, Result, Scalar};

pub use smoothing::{sample_smoothed_label, LabelSmoothing, SmoothedLabel, Source};
pub use train::{train_gan, train_gan_with, train_m2h_gan, train_m2h_gan_with, EpochLoss, TrainedGan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Gan,
    M2h,
}

/// Generator stack: `dim -> hidden -> dim`, both layers normalized with tanh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub dim: usize,
    pub hidden: usize,
}

impl GeneratorSpec {
    pub fn new(dim: usize) -> Self {
        GeneratorSpec { dim, hidden: 512 }
    }

    pub fn layers(&self) -> [LayerSpec; 2] {
        [
            LayerSpec::normalized(self.hidden, Activation::Tanh),
            LayerSpec::normalized(self.dim, Activation::Tanh),
        ]
    }
}

/// Discriminator stack: `dim -> hidden (tanh) -> head`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminatorSpec {
    pub variant: Variant,
    pub dim: usize,
    pub hidden: usize,
    /// Number of themes `N`; the M2H head has `N + 1` outputs.
    pub classes: usize,
}

impl DiscriminatorSpec {
    pub fn new(variant: Variant, dim: usize, classes: usize) -> Self {
        DiscriminatorSpec {
            variant,
            dim,
            hidden: 128,
            classes,
        }
    }

    pub fn outputs(&self) -> usize {
        match self.variant {
            Variant::Gan => 1,
            Variant::M2h => self.classes + 1,
        }
    }

    pub fn layers(&self) -> [LayerSpec; 2] {
        let head = match self.variant {
            Variant::Gan => LayerSpec::new(1, Activation::Sigmoid),
            Variant::M2h => LayerSpec::new(self.classes + 1, Activation::Softmax),
        };
        [LayerSpec::new(self.hidden, Activation::Tanh), head]
    }
}

/// Maps an embedding to a generated embedding of the same size.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator<F> {
    net: Network<F>,
}

impl<F: Scalar> Generator<F> {
    pub fn init<R: Rng + ?Sized>(spec: GeneratorSpec, rng: &mut R) -> Result<Self> {
        Generator::from_network(Network::init(spec.dim, &spec.layers(), rng)?)
    }

    pub fn from_network(net: Network<F>) -> Result<Self> {
        if net.input_dim() != net.output_dim() {
            return Err(Error::dim("generator output", net.input_dim(), net.output_dim()));
        }
        Ok(Generator { net })
    }

    pub fn dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn network(&self) -> &Network<F> {
        &self.net
    }

    pub(crate) fn network_mut(&mut self) -> &mut Network<F> {
        &mut self.net
    }

    pub fn into_network(self) -> Network<F> {
        self.net
    }

    /// `x~ = G(z)`.
    pub fn generate(&self, z: &[F]) -> Result<Vec<F>> {
        Ok(self.net.forward(z)?.0)
    }

    pub fn generate_batch(&self, z: ArrayView2<'_, F>) -> Result<Array2<F>> {
        self.net.predict(z)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator<F> {
    net: Network<F>,
    variant: Variant,
}

impl<F: Scalar> Discriminator<F> {
    pub fn init<R: Rng + ?Sized>(spec: DiscriminatorSpec, rng: &mut R) -> Result<Self> {
        Ok(Discriminator {
            net: Network::init(spec.dim, &spec.layers(), rng)?,
            variant: spec.variant,
        })
    }

    pub fn from_network(net: Network<F>, variant: Variant) -> Result<Self> {
        let head = net.layers().last().expect("non-empty network").activation;
        let ok = match variant {
            Variant::Gan => net.output_dim() == 1 && head == Activation::Sigmoid,
            Variant::M2h => net.output_dim() >= 2 && head == Activation::Softmax,
        };
        if !ok {
            return Err(Error::Config(format!(
                "network head does not match the {variant:?} discriminator"
            )));
        }
        Ok(Discriminator { net, variant })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn network(&self) -> &Network<F> {
        &self.net
    }

    pub(crate) fn network_mut(&mut self) -> &mut Network<F> {
        &mut self.net
    }

    pub fn into_network(self) -> Network<F> {
        self.net
    }

    /// Index of the FAKE output of an M2H discriminator.
    pub fn fake_class(&self) -> usize {
        self.net.output_dim() - 1
    }

    /// Raw head outputs: `p(fake)` for GAN, the class distribution for M2H.
    pub fn probabilities(&self, x: ArrayView2<'_, F>) -> Result<Array2<F>> {
        self.net.predict(x)
    }

    /// Per-row verdict: `true` when the sample is judged generated.
    /// GAN thresholds `p(fake)` at 0.5; M2H checks whether FAKE is top-1.
    pub fn judges_fake(&self, x: ArrayView2<'_, F>) -> Result<Vec<bool>> {
        let p = self.probabilities(x)?;
        Ok(match self.variant {
            Variant::Gan => p.column(0).iter().map(|&v| v > F::lit(0.5)).collect(),
            Variant::M2h => {
                let fake = self.fake_class();
                p.rows().into_iter().map(|r| argmax(r.iter().copied()) == fake).collect()
            }
        })
    }

    /// Top-1 class (lowest index on ties) of an M2H head.
    pub fn classify(&self, x: ArrayView2<'_, F>) -> Result<Vec<usize>> {
        let p = self.probabilities(x)?;
        Ok(p.rows().into_iter().map(|r| argmax(r.iter().copied())).collect())
    }

    /// Most probable theme of an M2H head, ignoring the FAKE output.
    pub fn classify_theme(&self, x: ArrayView2<'_, F>) -> Result<Vec<usize>> {
        if self.variant != Variant::M2h {
            return Err(Error::Config("theme assignment needs an N+1-way discriminator".into()));
        }
        let p = self.probabilities(x)?;
        let fake = self.fake_class();
        Ok(p.rows()
            .into_iter()
            .map(|r| argmax(r.iter().take(fake).copied()))
            .collect())
    }
}

/// Index of the first maximum.
pub(crate) fn argmax<F: PartialOrd>(values: impl IntoIterator<Item = F>) -> usize {
    let mut best: Option<(usize, F)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match &best {
            Some((_, b)) if !(v > *b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map_or(0, |(i, _)| i)
}

/// Hyperparameters of adversarial training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarialConfig {
    pub epochs: usize,
    /// Plain SGD step size for both players.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub generator_hidden: usize,
    pub discriminator_hidden: usize,
    pub smoothing: LabelSmoothing,
    pub seed: u64,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        AdversarialConfig {
            epochs: 25,
            learning_rate: 0.02,
            batch_size: 32,
            generator_hidden: 512,
            discriminator_hidden: 128,
            smoothing: LabelSmoothing::default(),
            seed: 0,
        }
    }
}

impl AdversarialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("adversarial training needs at least one epoch".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.generator_hidden == 0 || self.discriminator_hidden == 0 {
            return Err(Error::Config("hidden layers must be non-empty".into()));
        }
        self.smoothing.validate()
    }

    pub fn generator_spec(&self, dim: usize) -> GeneratorSpec {
        GeneratorSpec {
            dim,
            hidden: self.generator_hidden,
        }
    }

    pub fn discriminator_spec(&self, variant: Variant, dim: usize, classes: usize) -> DiscriminatorSpec {
        DiscriminatorSpec {
            variant,
            dim,
            hidden: self.discriminator_hidden,
            classes,
        }
    }
}
