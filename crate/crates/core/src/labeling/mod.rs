//! Clip labels from activation confidences, the class taxonomy, and the
//! train/test split of tracks.

mod activation;
mod split;
mod taxonomy;

pub use activation::{
    clip_label, moving_average, window_samples, ActivationTable, SmoothedActivations, TIME_TOLERANCE,
};
pub use split::{stratified_split, SplitResult};
pub use taxonomy::{
    build_taxonomy, collapse_labels, Taxonomy, TaxonomyMap, CANONICAL_CLASSES, DEFAULT_MIN_SONGS, DEFAULT_TAXONOMY,
    OTHER_CLASS,
};

use thiserror::Error;

/// Moving-average window for label smoothing, in seconds.
pub const DEFAULT_WINDOW_SECONDS: f64 = 0.1;
/// Smoothed confidence at or above this marks an instrument active.
pub const DEFAULT_LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("activation table for {track_id}: {reason}")]
    Table { track_id: String, reason: String },
    #[error("window of {window_seconds} s is shorter than one {step} s time step")]
    Window { window_seconds: f64, step: f64 },
    #[error("clip [{clip_start}, {clip_end}) of {track_id} is outside the annotated range [{first}, {end})")]
    ClipOutOfRange {
        track_id: String,
        clip_start: f64,
        clip_end: f64,
        first: f64,
        end: f64,
    },
    #[error("taxonomy line {line}: {reason}")]
    Taxonomy { line: usize, reason: String },
    #[error("{0}")]
    Shape(String),
    #[error("split: {0}")]
    Split(String),
}
