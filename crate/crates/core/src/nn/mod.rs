//! Dense feed-forward networks with manual backpropagation.
//!
//! Each layer computes `activation(layer_norm?(x W^T + b))` on a batch of
//! row vectors. Layer normalization standardizes the pre-activations of
//! every sample across the layer's units and applies a learned gain and
//! shift.

mod checkpoint;
pub mod gradcheck;
mod layer;
mod loss;
mod optim;

pub use checkpoint::{load_network, network_from_bytes, network_to_bytes, save_network, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layer::{
    Activation, DenseLayer, ForwardCache, Gradients, LayerGradients, LayerNorm, LayerSpec, Network,
    LAYER_NORM_EPS,
};
pub use loss::{bce_batch, bce_loss, cce_batch, cce_loss, PROB_CLAMP};
pub use optim::{AdamState, Optimizer};
