//! Theme identification of noisy (ASR) transcripts through an adversarial
//! mapping of their topic embeddings toward the clean (TRS) embedding space.
//!
//! The pipeline is split into:
//!
//! - [`corpus`]: synthetic paired TRS/ASR corpora, the ASR noise channel and WER.
//! - [`lda`]: collapsed Gibbs LDA, fold-in inference and the concatenated
//!   multi-run embedding.
//! - [`nn`]: a small dense network engine with layer normalization, losses,
//!   optimizers, checkpoints and finite-difference gradient checking.
//! - [`adversarial`]: the baseline GAN and the M2H-GAN (semi-supervised
//!   discriminator with an extra FAKE class, label-free generator).
//! - [`classifier`]: the downstream theme classifier and its epoch metrics.
//! - [`harness`]: multi-seed experiment orchestration and reporting.
//!
//! Network code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the double-precision instantiation used by the harness.

pub mod adversarial;
pub mod classifier;
pub mod corpus;
mod error;
pub mod harness;
pub mod lda;
pub mod nn;
mod rng;
mod scalar;

pub use error::{Error, Result};
pub use rng::{derive_seed, seeded_rng, SeedRng};
pub use scalar::Scalar;

/// Dense network in double precision.
pub type Network = nn::Network<f64>;
/// Dense network in single precision.
pub type Network32 = nn::Network<f32>;
/// Optimizer state in double precision.
pub type Optimizer = nn::Optimizer<f64>;
/// Parameter gradients in double precision.
pub type Gradients = nn::Gradients<f64>;
/// Adversarial training outcome in double precision.
pub type TrainedGan = adversarial::TrainedGan<f64>;
/// Trained classifier in double precision.
pub type TrainedClassifier = classifier::TrainedClassifier<f64>;

/// Dimension of the concatenated topic embedding (10 runs of 25 topics).
pub const EMBEDDING_DIM: usize = lda::DEFAULT_RUNS * lda::DEFAULT_TOPICS;
