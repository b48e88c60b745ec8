//! MFCC features with Gaussian summarization, and the shallow baselines.

mod cache;
mod forest;
mod logistic;
mod majority;
mod mfcc;
mod summary;

pub use cache::{FeatureCache, FEATURE_MAGIC, FEATURE_VERSION};
pub use forest::{forest_predict, forest_train, train_tree, Forest, ForestConfig, Node, Tree};
pub use logistic::{logistic_predict, logistic_train, LogisticConfig, LogisticModel, Standardizer};
pub use majority::{majority_baseline, MAJORITY_TOP_K};
pub use mfcc::{
    dct_matrix, hann_window, hz_to_mel, mel_band_edges, mel_filterbank, mel_to_hz, mfcc, MfccConfig, MfccExtractor,
    LOG_FLOOR,
};
pub use summary::{delta, deltas, gaussian_fit, stack, summary_len, GaussianSummary, DELTA_WIDTH};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{samples} samples is shorter than one {frame_size}-sample frame")]
    TooShort { samples: usize, frame_size: usize },
    #[error("{0} frames, need at least 2 for a covariance")]
    TooFewFrames(usize),
    #[error("no rows")]
    Empty,
    #[error("{0}")]
    Shape(String),
    #[error("feature cache: {0}")]
    Cache(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// MFCC, deltas and Gaussian summary of one clip, flattened to
/// `summary_len(3 * num_coeffs)` values.
pub fn clip_features(extractor: &MfccExtractor, samples: &[f32]) -> Result<Vec<f64>, FeatureError> {
    let c = extractor.mfcc(samples)?;
    let (d1, d2) = deltas(&c);
    Ok(gaussian_fit(&stack(&c, &d1, &d2))?.to_vector())
}
