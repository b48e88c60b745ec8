//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{read_text, PipelineError, Result};
use crate::features::{ForestConfig, LogisticConfig, MfccConfig};
use crate::labeling::{DEFAULT_LABEL_THRESHOLD, DEFAULT_MIN_SONGS, DEFAULT_WINDOW_SECONDS};
use crate::nn::{Architecture, SgdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    /// The full-size network on one-second clips.
    Full,
    /// Small filters and widths; same topology.
    Reduced,
}

impl FromStr for ArchKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "reduced" => Ok(Self::Reduced),
            other => Err(PipelineError::Config(format!(
                "architecture {other:?} is not \"full\" or \"reduced\""
            ))),
        }
    }
}

impl ArchKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Reduced => "reduced",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub audio_dir: PathBuf,
    pub activation_dir: PathBuf,
    /// `None` uses the built-in MedleyDB mapping.
    pub taxonomy_file: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub min_songs: usize,
    pub label_window: f64,
    pub label_threshold: f64,
    pub architecture: ArchKind,
    pub dropout: f64,
    pub sgd: SgdConfig,
    pub mfcc: MfccConfig,
    pub eval_threshold: f64,
    pub logistic: LogisticConfig,
    pub forest: ForestConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            audio_dir: PathBuf::from("audio"),
            activation_dir: PathBuf::from("activations"),
            taxonomy_file: None,
            output_dir: PathBuf::from("out"),
            test_fraction: 0.2,
            split_seed: 0,
            min_songs: DEFAULT_MIN_SONGS,
            label_window: DEFAULT_WINDOW_SECONDS,
            label_threshold: DEFAULT_LABEL_THRESHOLD,
            architecture: ArchKind::Full,
            dropout: 0.5,
            sgd: SgdConfig::default(),
            mfcc: MfccConfig::default(),
            eval_threshold: 0.5,
            logistic: LogisticConfig::default(),
            forest: ForestConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| PipelineError::Config(format!("{key} = {value:?} is not a valid value")))
}

fn optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>> {
    if value == none {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl RunConfig {
    /// Parses `key = value` lines; lines starting with `#` are comments. Relative paths are
    /// resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", i + 1)))?;
            match key {
                "audio_dir" => cfg.audio_dir = path(value),
                "activation_dir" => cfg.activation_dir = path(value),
                "taxonomy_file" => cfg.taxonomy_file = (value != "builtin").then(|| path(value)),
                "output_dir" => cfg.output_dir = path(value),
                "test_fraction" => cfg.test_fraction = parse(key, value)?,
                "split_seed" => cfg.split_seed = parse(key, value)?,
                "min_songs" => cfg.min_songs = parse(key, value)?,
                "label_window" => cfg.label_window = parse(key, value)?,
                "label_threshold" => cfg.label_threshold = parse(key, value)?,
                "architecture" => cfg.architecture = value.parse()?,
                "dropout" => cfg.dropout = parse(key, value)?,
                "learning_rate" => cfg.sgd.learning_rate = parse(key, value)?,
                "batch_size" => cfg.sgd.batch_size = parse(key, value)?,
                "epochs" => cfg.sgd.epochs = parse(key, value)?,
                "seed" => cfg.sgd.seed = parse(key, value)?,
                "lr_schedule" => {
                    if value != "constant" {
                        return Err(PipelineError::Config(format!(
                            "lr_schedule {value:?}: only \"constant\" is supported"
                        )));
                    }
                }
                "mfcc_frame_size" => cfg.mfcc.frame_size = parse(key, value)?,
                "mfcc_hop" => cfg.mfcc.hop = parse(key, value)?,
                "mfcc_mel_bands" => cfg.mfcc.mel_bands = parse(key, value)?,
                "mfcc_coeffs" => cfg.mfcc.num_coeffs = parse(key, value)?,
                "eval_threshold" => cfg.eval_threshold = parse(key, value)?,
                "logistic_learning_rate" => cfg.logistic.learning_rate = parse(key, value)?,
                "logistic_epochs" => cfg.logistic.epochs = parse(key, value)?,
                "forest_trees" => cfg.forest.trees = parse(key, value)?,
                "forest_max_depth" => cfg.forest.max_depth = optional(key, value, "none")?,
                "forest_min_leaf" => cfg.forest.min_leaf = parse(key, value)?,
                "forest_features_per_split" => cfg.forest.features_per_split = optional(key, value, "sqrt")?,
                "forest_seed" => cfg.forest.seed = parse(key, value)?,
                other => return Err(PipelineError::Config(format!("line {}: unknown key {other:?}", i + 1))),
            }
        }
        Ok(cfg)
    }

    /// Reads a config file; relative paths are taken from its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&read_text(path)?, base)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("audio_dir", self.audio_dir.display().to_string());
        kv("activation_dir", self.activation_dir.display().to_string());
        kv(
            "taxonomy_file",
            self.taxonomy_file
                .as_ref()
                .map_or_else(|| "builtin".into(), |p| p.display().to_string()),
        );
        kv("output_dir", self.output_dir.display().to_string());
        kv("test_fraction", self.test_fraction.to_string());
        kv("split_seed", self.split_seed.to_string());
        kv("min_songs", self.min_songs.to_string());
        kv("label_window", self.label_window.to_string());
        kv("label_threshold", self.label_threshold.to_string());
        kv("architecture", self.architecture.name().into());
        kv("dropout", self.dropout.to_string());
        kv("learning_rate", self.sgd.learning_rate.to_string());
        kv("batch_size", self.sgd.batch_size.to_string());
        kv("epochs", self.sgd.epochs.to_string());
        kv("seed", self.sgd.seed.to_string());
        kv("lr_schedule", "constant".into());
        kv("mfcc_frame_size", self.mfcc.frame_size.to_string());
        kv("mfcc_hop", self.mfcc.hop.to_string());
        kv("mfcc_mel_bands", self.mfcc.mel_bands.to_string());
        kv("mfcc_coeffs", self.mfcc.num_coeffs.to_string());
        kv("eval_threshold", self.eval_threshold.to_string());
        kv("logistic_learning_rate", self.logistic.learning_rate.to_string());
        kv("logistic_epochs", self.logistic.epochs.to_string());
        kv("forest_trees", self.forest.trees.to_string());
        kv(
            "forest_max_depth",
            self.forest.max_depth.map_or_else(|| "none".into(), |d| d.to_string()),
        );
        kv("forest_min_leaf", self.forest.min_leaf.to_string());
        kv(
            "forest_features_per_split",
            self.forest
                .features_per_split
                .map_or_else(|| "sqrt".into(), |d| d.to_string()),
        );
        kv("forest_seed", self.forest.seed.to_string());
        out
    }

    /// Checks value ranges and that the input directories (and taxonomy file,
    /// if any) exist.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} outside (0, 1)", self.test_fraction));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.label_window > 0.0) {
            return bad(format!("label_window {} must be positive", self.label_window));
        }
        for (name, t) in [
            ("label_threshold", self.label_threshold),
            ("eval_threshold", self.eval_threshold),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("{name} {t} outside [0, 1]"));
            }
        }
        if self.logistic.epochs == 0 || !(self.logistic.learning_rate > 0.0) {
            return bad("logistic regression needs positive epochs and learning rate".into());
        }
        self.sgd.validate()?;
        self.mfcc.validate()?;
        self.forest.validate()?;
        for (name, dir) in [("audio_dir", &self.audio_dir), ("activation_dir", &self.activation_dir)] {
            if !dir.is_dir() {
                return bad(format!("{name} {} is not a directory", dir.display()));
            }
        }
        if let Some(t) = &self.taxonomy_file {
            if !t.is_file() {
                return bad(format!("taxonomy_file {} does not exist", t.display()));
            }
        }
        Ok(())
    }

    pub fn network(&self, num_classes: usize) -> Architecture {
        match self.architecture {
            ArchKind::Full => Architecture::full(num_classes, self.dropout),
            ArchKind::Reduced => Architecture::reduced(crate::CLIP_SAMPLES, num_classes, self.dropout),
        }
    }
}
