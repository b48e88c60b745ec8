//! MFCC feature extraction and the shallow baselines.

use std::str::FromStr;

use log::info;
use rayon::prelude::*;

use super::train::{ClipSource, ManifestClips};
use super::{write_file, OutputLayout, PipelineError, Result, RunConfig};
use crate::features::{
    clip_features, forest_predict, forest_train, logistic_predict, logistic_train, majority_baseline, FeatureCache,
    MfccExtractor,
};
use crate::metrics::{binarize, evaluate, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Logistic,
    Forest,
    Majority,
}

impl FromStr for BaselineKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Self::Logistic),
            "forest" => Ok(Self::Forest),
            "majority" => Ok(Self::Majority),
            other => Err(PipelineError::Config(format!(
                "baseline {other:?} is not logistic, forest or majority"
            ))),
        }
    }
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Logistic => "logistic",
            Self::Forest => "forest",
            Self::Majority => "majority",
        }
    }

    pub fn model_name(self) -> &'static str {
        match self {
            Self::Logistic => "MFCC + Logistic Regression",
            Self::Forest => "MFCC + Random Forest",
            Self::Majority => "Predict Majority Class",
        }
    }
}

fn extract_split(extractor: &MfccExtractor, clips: &ManifestClips) -> Result<FeatureCache> {
    let rows: Vec<Vec<f32>> = (0..clips.len())
        .into_par_iter()
        .map(|i| {
            let f = clip_features(extractor, &clips.samples(i)?)?;
            Ok(f.into_iter().map(|v| v as f32).collect())
        })
        .collect::<Result<_>>()?;
    let dims = crate::features::summary_len(3 * extractor.config().num_coeffs);
    let ids = (0..clips.len()).map(|i| clips.clip_id(i)).collect();
    Ok(FeatureCache::new(dims, ids, rows)?)
}

/// Computes the MFCC Gaussian summary of every train and test clip and
/// writes `features/{train,test}.feat`.
pub fn extract_features(cfg: &RunConfig) -> Result<[usize; 2]> {
    cfg.validate()?;
    let layout = OutputLayout::new(&cfg.output_dir);
    let extractor = MfccExtractor::new(cfg.mfcc)?;
    let mut counts = [0; 2];
    for (i, split) in ["train", "test"].into_iter().enumerate() {
        let clips = ManifestClips::open(&layout.manifest(split))?;
        let cache = extract_split(&extractor, &clips)?;
        let path = layout.features(split);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(super::io_err(dir))?;
        }
        cache.write(&path)?;
        counts[i] = cache.rows.len();
        info!("split={split} clips={} dims={}", cache.rows.len(), cache.dims);
    }
    Ok(counts)
}

fn load_features(layout: &OutputLayout, split: &str, clips: &ManifestClips) -> Result<Vec<Vec<f64>>> {
    let cache = FeatureCache::read(&layout.features(split))?;
    let ids: Vec<String> = (0..clips.len()).map(|i| clips.clip_id(i)).collect();
    cache.check_aligned(&ids)?;
    Ok(cache.rows_f64())
}

/// Trains a baseline on the train split, scores the test split and writes
/// `reports/<kind>.txt`. Logistic and forest read the feature caches from
/// [`extract_features`]; majority only needs the manifests.
pub fn run_baseline(cfg: &RunConfig, kind: BaselineKind) -> Result<EvalReport> {
    cfg.validate()?;
    let layout = OutputLayout::new(&cfg.output_dir);
    let train = ManifestClips::open(&layout.manifest("train"))?;
    let test = ManifestClips::open(&layout.manifest("test"))?;
    let labels = |c: &ManifestClips| -> Vec<Vec<u8>> { c.manifest.entries.iter().map(|e| e.labels.clone()).collect() };
    let (train_y, test_y) = (labels(&train), labels(&test));
    let predicted = match kind {
        BaselineKind::Majority => {
            let row = majority_baseline(&train_y)?;
            vec![row; test_y.len()]
        }
        BaselineKind::Logistic => {
            let model = logistic_train(&load_features(&layout, "train", &train)?, &train_y, &cfg.logistic)?;
            binarize(
                &logistic_predict(&model, &load_features(&layout, "test", &test)?)?,
                cfg.eval_threshold,
            )
        }
        BaselineKind::Forest => {
            let forest = forest_train(&load_features(&layout, "train", &train)?, &train_y, &cfg.forest)?;
            binarize(
                &forest_predict(&forest, &load_features(&layout, "test", &test)?)?,
                cfg.eval_threshold,
            )
        }
    };
    let report = evaluate(&predicted, &test_y)?;
    write_file(
        &layout.report(kind.name()),
        report.to_text(kind.model_name(), &test.manifest.classes),
    )?;
    info!("{}", report.table_row(kind.model_name()));
    Ok(report)
}
