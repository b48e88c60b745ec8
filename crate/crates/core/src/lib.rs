//! Raw-waveform convolutional network for multi-label musical instrument
//! recognition, with the MFCC baselines it is compared against.
//!
//! - [`nn`]: layer kernels, backpropagation, SGD and checkpoints.
//! - [`audio`]: WAV decoding and one-second clip slicing.
//! - [`labeling`]: activation-confidence labels, taxonomy collapse and the
//!   stratified track split.
//! - [`features`]: MFCC / delta / Gaussian features and the shallow baselines.
//! - [`metrics`]: multi-label evaluation report.
//! - [`pipeline`]: configuration and the end-to-end commands.

pub mod audio;
pub mod features;
pub mod labeling;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod tensor;

pub use tensor::{Scalar, Tensor};

/// Sample rate every track must have.
pub const SAMPLE_RATE: u32 = 44_100;
/// Samples in one clip (one second).
pub const CLIP_SAMPLES: usize = SAMPLE_RATE as usize;
