//! End-to-end commands: dataset preparation, CNN training and evaluation,
//! feature extraction and baselines, and first-layer filter analysis.
//!
//! Every command reads a [`RunConfig`] and works inside its output directory:
//!
//! ```text
//! <output_dir>/taxonomy.tsv                 resolved taxonomy
//! <output_dir>/{train,test}_tracks.txt      track split
//! <output_dir>/{train,test}_manifest.tsv    clip manifests
//! <output_dir>/checkpoints/epoch_NNNN.ckpt  one checkpoint per epoch
//! <output_dir>/checkpoints/best.ckpt        best by test F-micro
//! <output_dir>/train_log.txt                key=value line per epoch
//! <output_dir>/features/{train,test}.feat   MFCC summary caches
//! <output_dir>/reports/*.txt                evaluation reports
//! <output_dir>/filters/*                    filter spectra (CSV, PGM)
//! ```

mod baselines;
mod config;
mod dataset;
mod filters;
mod gcn;
mod seeds;
mod synthetic;
mod train;

pub use baselines::{extract_features, run_baseline, BaselineKind};
pub use config::{ArchKind, RunConfig};
pub use dataset::{find_activation_file, prepare_dataset, track_id_from_path, PrepareSummary};
pub use filters::{analyze_filters, filter_spectra, moving_average_5, pgm_bytes, FilterAnalysis, FilterSpectrum};
pub use gcn::{global_contrast_normalize, GCN_EPSILON};
pub use seeds::derive_seed;
pub use synthetic::{
    make_synthetic_corpus, sinusoid_clips, SyntheticOptions, SyntheticTrack, SYNTHETIC_INSTRUMENTS, SYNTHETIC_RARE_FROM,
};
pub use train::{
    evaluate_checkpoint, evaluate_params, mean_eval_loss, predict_scores, train, train_epoch, train_epochs, ClipSource,
    EpochStats, InMemoryClips, ManifestClips, TrainSummary,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::audio::AudioError;
use crate::features::FeatureError;
use crate::labeling::LabelError;
use crate::metrics::MetricsError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_owned(),
        source,
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// Standard file locations inside an output directory.
#[derive(Debug, Clone)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn taxonomy(&self) -> PathBuf {
        self.root.join("taxonomy.tsv")
    }

    pub fn tracks(&self, split: &str) -> PathBuf {
        self.root.join(format!("{split}_tracks.txt"))
    }

    pub fn manifest(&self, split: &str) -> PathBuf {
        self.root.join(format!("{split}_manifest.tsv"))
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn epoch_checkpoint(&self, epoch: u32) -> PathBuf {
        self.checkpoint_dir().join(format!("epoch_{epoch:04}.ckpt"))
    }

    pub fn best_checkpoint(&self) -> PathBuf {
        self.checkpoint_dir().join("best.ckpt")
    }

    pub fn train_log(&self) -> PathBuf {
        self.root.join("train_log.txt")
    }

    pub fn features(&self, split: &str) -> PathBuf {
        self.root.join("features").join(format!("{split}.feat"))
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(format!("{name}.txt"))
    }

    pub fn filters_dir(&self) -> PathBuf {
        self.root.join("filters")
    }
}
