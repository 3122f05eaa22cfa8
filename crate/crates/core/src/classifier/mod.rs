//! Downstream theme classifier and epoch-selection metrics.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::adversarial::Generator;
use crate::corpus::Document;
use crate::lda::{stack_embeddings, Embedder, InferenceConfig};
use crate::nn::{cce_batch, Activation, LayerSpec, Network, Optimizer};
use crate::{derive_seed, seeded_rng, Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Hidden tanh layer widths.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    /// Adam step size; the moment decay rates are the usual 0.9 / 0.999.
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hidden: vec![256, 256],
            epochs: 40,
            learning_rate: 0.001,
            batch_size: 32,
        }
    }
}

impl ClassifierConfig {
    pub fn layers(&self, classes: usize) -> Vec<LayerSpec> {
        self.hidden
            .iter()
            .map(|&h| LayerSpec::new(h, Activation::Tanh))
            .chain(std::iter::once(LayerSpec::new(classes, Activation::Softmax)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layers must be non-empty".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Features and theme labels of one split.
#[derive(Clone, Copy, Debug)]
pub struct LabeledSet<'a, F> {
    pub features: ArrayView2<'a, F>,
    pub labels: &'a [usize],
}

impl<'a, F: Scalar> LabeledSet<'a, F> {
    pub fn new(features: ArrayView2<'a, F>, labels: &'a [usize]) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::dim("labels", features.nrows(), labels.len()));
        }
        Ok(LabeledSet { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedClassifier<F> {
    pub network: Network<F>,
    pub history: Vec<EpochMetrics>,
}

/// Top-1 class per row, lowest index on ties.
pub fn predict<F: Scalar>(net: &Network<F>, features: ArrayView2<'_, F>) -> Result<Vec<usize>> {
    let p = net.predict(features)?;
    Ok(p.rows()
        .into_iter()
        .map(|r| crate::adversarial::argmax(r.iter().copied()))
        .collect())
}

pub fn accuracy<F: Scalar>(net: &Network<F>, set: &LabeledSet<'_, F>) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty set".into()));
    }
    let predicted = predict(net, set.features)?;
    let correct = predicted
        .iter()
        .zip(set.labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(correct as f64 / set.len() as f64)
}

/// Trains a softmax classifier with Adam and cross-entropy, recording dev
/// and test accuracy after every epoch. Weights use stream 0 of `seed`,
/// batch shuffling stream 1.
pub fn train_classifier<F: Scalar>(
    train: LabeledSet<'_, F>,
    dev: LabeledSet<'_, F>,
    test: LabeledSet<'_, F>,
    classes: usize,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedClassifier<F>> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("classifier needs training samples".into()));
    }
    let dim = train.features.ncols();
    for cols in [dev.features.ncols(), test.features.ncols()] {
        if cols != dim {
            return Err(Error::dim("evaluation features", dim, cols));
        }
    }
    if let Some(&bad) = train
        .labels
        .iter()
        .chain(dev.labels)
        .chain(test.labels)
        .find(|&&l| l >= classes)
    {
        return Err(Error::InvalidInput(format!("label {bad} out of range for {classes} classes")));
    }

    let mut network = Network::init(dim, &config.layers(classes), &mut seeded_rng(derive_seed(seed, 0)))?;
    let mut optimizer = Optimizer::<F>::adam(config.learning_rate);
    let mut rng = seeded_rng(derive_seed(seed, 1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for idx in order.chunks(config.batch_size) {
            let x = train.features.select(Axis(0), idx);
            let y: Vec<usize> = idx.iter().map(|&i| train.labels[i]).collect();
            let cache = network.forward_batch(x.view())?;
            let (loss, d_logits) = cce_batch(cache.output(), &y)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("classifier loss at epoch {epoch}")));
            }
            let grads = network.backward_from_logits(&cache, &d_logits)?;
            optimizer.step(&mut network, &grads)?;
            total += loss;
            batches += 1;
        }
        history.push(EpochMetrics {
            epoch,
            train_loss: total / batches as f64,
            dev_accuracy: accuracy(&network, &dev)?,
            test_accuracy: accuracy(&network, &test)?,
        });
    }
    Ok(TrainedClassifier { network, history })
}

/// Test accuracy at the epoch with the best dev accuracy (earliest on ties)
/// and the best test accuracy over all epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub epoch: usize,
    pub dev: f64,
    pub real_test: f64,
    pub max_test: f64,
}

pub fn select_epoch(history: &[EpochMetrics]) -> Result<Selection> {
    let Some(first) = history.first() else {
        return Err(Error::InvalidInput("empty training history".into()));
    };
    let mut best = first;
    for m in &history[1..] {
        if m.dev_accuracy > best.dev_accuracy {
            best = m;
        }
    }
    let max_test = history
        .iter()
        .map(|m| m.test_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Selection {
        epoch: best.epoch,
        dev: best.dev_accuracy,
        real_test: best.test_accuracy,
        max_test,
    })
}

/// `(real_test, max_test)`.
pub fn real_and_max_test(history: &[EpochMetrics]) -> Result<(f64, f64)> {
    select_epoch(history).map(|s| (s.real_test, s.max_test))
}

/// Feature-wise affine map to zero mean and unit variance, fitted on one
/// matrix (usually the training split) and applied to any other.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer<F> {
    mean: Vec<F>,
    inv_std: Vec<F>,
}

impl<F: Scalar> Standardizer<F> {
    /// Constant columns keep unit scale.
    pub fn fit(x: ArrayView2<'_, F>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidInput("cannot standardize zero rows".into()));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty rows");
        let std = x.std_axis(Axis(0), F::zero());
        let inv_std = std
            .iter()
            .map(|&s| if s > F::lit(1e-12) { F::one() / s } else { F::one() })
            .collect();
        Ok(Standardizer {
            mean: mean.to_vec(),
            inv_std,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[F] {
        &self.mean
    }

    pub fn transform(&self, mut x: Array2<F>) -> Result<Array2<F>> {
        if x.ncols() != self.dim() {
            return Err(Error::dim("standardizer input", self.dim(), x.ncols()));
        }
        for mut row in x.rows_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.inv_std) {
                *v = (*v - m) * s;
            }
        }
        Ok(x)
    }
}

/// Passes embeddings through a frozen generator, or returns them unchanged.
pub fn map_features<F: Scalar>(generator: Option<&Generator<F>>, embeddings: Array2<F>) -> Result<Array2<F>> {
    match generator {
        Some(g) => g.generate_batch(embeddings.view()),
        None => Ok(embeddings),
    }
}

/// Embeds documents with their channel's embedder and optionally maps them
/// through a frozen generator.
pub fn featurize<F: Scalar>(
    generator: Option<&Generator<F>>,
    embedder: &Embedder,
    docs: &[&Document],
    inference: &InferenceConfig,
) -> Result<Array2<F>> {
    let embeddings = embedder.embed_all(docs, inference)?;
    map_features(generator, stack_embeddings(&embeddings)?)
}
