//! Minimal network engine for the raw-waveform instrument classifier.
//!
//! The layer set is fixed: temporal (valid, stride-1) convolution, 1-D max
//! pooling, ReLU, fully connected, inverted dropout and sigmoid, trained with
//! a binary cross-entropy loss and plain mini-batch SGD. Every layer has a
//! hand-written backward pass; the test suites check them against central
//! finite differences in `f64`.
//!
//! Convolution is implemented as cross-correlation (no kernel flip). For
//! learned filters the two are equivalent up to a reversal of the weights.

mod arch;
mod checkpoint;
mod layers;
mod loss;
mod network;

pub use arch::{infer_shapes, Architecture, LayerSpec};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::{
    dropout, dropout_backward, fully_connected_backward, fully_connected_forward, maxpool_backward, maxpool_forward,
    relu, relu_backward, sigmoid, sigmoid_backward, temporal_conv_backward, temporal_conv_forward, ConvGrads, FcGrads,
    PoolOutput,
};
pub use loss::{bce_loss, BCE_EPSILON};
pub use network::{
    backward, batch_gradient, forward, forward_batch, sgd_step, BatchGradient, ForwardCache, LayerCache, LayerParams,
    Mode, ModelParams, SgdConfig,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("layer {layer}: input length {length} is shorter than the required {required}")]
    InputTooShort {
        layer: usize,
        length: usize,
        required: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argmax index {index} out of range for input length {length}")]
    IndexOutOfRange { index: usize, length: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
