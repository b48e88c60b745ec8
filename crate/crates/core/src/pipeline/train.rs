//! CNN training loop, checkpointing and evaluation.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    derive_seed, global_contrast_normalize, read_text, write_file, OutputLayout, PipelineError, Result, RunConfig,
};
use crate::audio::{read_manifest, ClipReader, Manifest};
use crate::metrics::{binarize, evaluate, EvalReport};
use crate::nn::{
    batch_gradient, bce_loss, forward_batch, read_checkpoint, sgd_step, write_checkpoint, Architecture, Checkpoint,
    Mode, ModelParams, SgdConfig,
};
use crate::tensor::Tensor;

/// Labelled clips addressable by index.
pub trait ClipSource: Sync {
    fn len(&self) -> usize;
    fn clip_id(&self, index: usize) -> String;
    fn labels(&self, index: usize) -> &[u8];
    fn samples(&self, index: usize) -> Result<Vec<f32>>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Clips held in memory.
#[derive(Debug, Clone, Default)]
pub struct InMemoryClips {
    pub ids: Vec<String>,
    pub samples: Vec<Vec<f32>>,
    pub labels: Vec<Vec<u8>>,
}

impl ClipSource for InMemoryClips {
    fn len(&self) -> usize {
        self.samples.len()
    }

    fn clip_id(&self, index: usize) -> String {
        self.ids[index].clone()
    }

    fn labels(&self, index: usize) -> &[u8] {
        &self.labels[index]
    }

    fn samples(&self, index: usize) -> Result<Vec<f32>> {
        Ok(self.samples[index].clone())
    }
}

/// Clips read on demand from the WAV files a manifest points at.
#[derive(Debug)]
pub struct ManifestClips {
    pub manifest: Manifest,
    reader: ClipReader,
}

impl ManifestClips {
    pub fn new(manifest: Manifest) -> Self {
        Self {
            manifest,
            reader: ClipReader::new(),
        }
    }

    pub fn open(path: &Path) -> Result<Self> {
        Ok(Self::new(read_manifest(path)?))
    }
}

impl ClipSource for ManifestClips {
    fn len(&self) -> usize {
        self.manifest.entries.len()
    }

    fn clip_id(&self, index: usize) -> String {
        self.manifest.entries[index].clip_id()
    }

    fn labels(&self, index: usize) -> &[u8] {
        &self.manifest.entries[index].labels
    }

    fn samples(&self, index: usize) -> Result<Vec<f32>> {
        let entry = &self.manifest.entries[index];
        self.reader
            .load(entry)
            .map_err(|e| PipelineError::Data(format!("clip {}: {e}", entry.clip_id())))
    }
}

/// GCN-normalized inputs and targets for the given clips, in order.
fn load_batch(
    arch: &Architecture,
    source: &dyn ClipSource,
    indices: &[usize],
) -> Result<(Vec<Tensor<f32>>, Vec<Tensor<f32>>)> {
    let [channels, length] = arch.input_shape();
    let loaded: Vec<(Tensor<f32>, Tensor<f32>)> = indices
        .par_iter()
        .map(|&i| {
            let samples = source.samples(i)?;
            if samples.len() != channels * length {
                return Err(PipelineError::Data(format!(
                    "clip {} has {} samples, the network expects {}",
                    source.clip_id(i),
                    samples.len(),
                    channels * length
                )));
            }
            let labels = source.labels(i);
            let x = Tensor::new(vec![channels, length], global_contrast_normalize(&samples))?;
            let y = Tensor::new(vec![labels.len()], labels.iter().map(|&b| b as f32).collect())?;
            Ok((x, y))
        })
        .collect::<Result<_>>()?;
    Ok(loaded.into_iter().unzip())
}

/// One pass over `source` in a seeded order: GCN, forward/backward in train
/// mode, one SGD step per batch (the last batch may be short). `epoch` is
/// 1-based and, with the SGD seed, fixes the order and dropout masks. Returns
/// the mean training loss over all clips.
pub fn train_epoch(
    arch: &Architecture,
    sgd: &SgdConfig,
    params: &mut ModelParams<f32>,
    source: &dyn ClipSource,
    epoch: u32,
) -> Result<f64> {
    sgd.validate()?;
    if source.is_empty() {
        return Err(PipelineError::Data("no training clips".into()));
    }
    let mut order: Vec<usize> = (0..source.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(&[sgd.seed, epoch as u64])));
    let mut loss_sum = 0.0;
    for (b, batch) in order.chunks(sgd.batch_size).enumerate() {
        let (inputs, targets) = load_batch(arch, source, batch)?;
        let seeds: Vec<u64> = (0..batch.len())
            .map(|k| derive_seed(&[sgd.seed, epoch as u64, b as u64, k as u64]))
            .collect();
        let bg = batch_gradient(arch, params, &inputs, &targets, Mode::Train, &seeds)?;
        sgd_step(params, &bg.gradient, sgd.learning_rate as f32);
        loss_sum += bg.losses.iter().sum::<f64>();
    }
    if !params.all_finite() {
        return Err(PipelineError::Data(format!(
            "training diverged in epoch {epoch} (non-finite weights); lower the learning rate"
        )));
    }
    Ok(loss_sum / source.len() as f64)
}

/// Runs epochs `epochs.start + 1 ..= epochs.end`, returning each mean loss.
pub fn train_epochs(
    arch: &Architecture,
    sgd: &SgdConfig,
    params: &mut ModelParams<f32>,
    source: &dyn ClipSource,
    epochs: Range<u32>,
) -> Result<Vec<f64>> {
    (epochs.start + 1..=epochs.end)
        .map(|e| train_epoch(arch, sgd, params, source, e))
        .collect()
}

const EVAL_CHUNK: usize = 32;

/// Eval-mode network outputs for every clip, in source order.
pub fn predict_scores(
    arch: &Architecture,
    params: &ModelParams<f32>,
    source: &dyn ClipSource,
) -> Result<Vec<Vec<f32>>> {
    let mut scores = Vec::with_capacity(source.len());
    let indices: Vec<usize> = (0..source.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let (inputs, _) = load_batch(arch, source, chunk)?;
        let seeds = vec![0; chunk.len()];
        for (out, _) in forward_batch(arch, params, &inputs, Mode::Eval, &seeds)? {
            scores.push(out.into_data());
        }
    }
    Ok(scores)
}

/// Eval-mode mean BCE over all clips.
pub fn mean_eval_loss(arch: &Architecture, params: &ModelParams<f32>, source: &dyn ClipSource) -> Result<f64> {
    let scores = predict_scores(arch, params, source)?;
    let mut total = 0.0;
    for (i, s) in scores.into_iter().enumerate() {
        let labels = source.labels(i);
        let target = Tensor::new(vec![labels.len()], labels.iter().map(|&b| b as f32).collect())?;
        total += bce_loss(&Tensor::new(vec![s.len()], s)?, &target)?.0;
    }
    Ok(total / source.len() as f64)
}

/// Thresholded eval-mode predictions scored against the clip labels.
pub fn evaluate_params(
    arch: &Architecture,
    params: &ModelParams<f32>,
    source: &dyn ClipSource,
    threshold: f64,
) -> Result<EvalReport> {
    let scores: Vec<Vec<f64>> = predict_scores(arch, params, source)?
        .into_iter()
        .map(|s| s.into_iter().map(f64::from).collect())
        .collect();
    let truth: Vec<Vec<u8>> = (0..source.len()).map(|i| source.labels(i).to_vec()).collect();
    Ok(evaluate(&binarize(&scores, threshold), &truth)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: u32,
    pub train_loss: f64,
    pub test: Option<EvalReport>,
}

impl EpochStats {
    fn log_line(&self) -> String {
        let mut line = format!("epoch={} train_loss={:.8}", self.epoch, self.train_loss);
        if let Some(r) = &self.test {
            for (name, v) in crate::metrics::TABLE_COLUMNS.iter().zip(r.table_values()) {
                let _ = write!(line, " test_{name}={v:.6}");
            }
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: Option<u32>,
}

fn log_value(line: &str, key: &str) -> Option<f64> {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

/// Trains the CNN on the prepared train manifest for `cfg.sgd.epochs` epochs,
/// evaluating on the test manifest after each epoch. Writes a checkpoint per
/// epoch, copies the best-by-test-F-micro one to `best.ckpt` (the latest one
/// when there is no test set) and keeps `train_log.txt` in step. With
/// `resume`, training continues after the checkpoint's epoch and produces the
/// same subsequent epochs as an uninterrupted run.
pub fn train(cfg: &RunConfig, resume: Option<&Path>) -> Result<TrainSummary> {
    cfg.validate()?;
    let layout = OutputLayout::new(&cfg.output_dir);
    let train_set = ManifestClips::open(&layout.manifest("train"))?;
    let test_path = layout.manifest("test");
    let test_set = if test_path.is_file() {
        Some(ManifestClips::open(&test_path)?).filter(|t| !t.is_empty())
    } else {
        None
    };
    let num_classes = train_set.manifest.classes.len();
    let arch = cfg.network(num_classes);

    let mut log_lines: Vec<String> = Vec::new();
    let mut best: Option<(f64, u32)> = None;
    let (mut params, start) = match resume {
        Some(path) => {
            let ck = read_checkpoint(path)?;
            arch.check_params(&ck.params)?;
            let same_run = SgdConfig {
                epochs: cfg.sgd.epochs,
                ..ck.sgd.clone()
            };
            if same_run != cfg.sgd {
                return Err(PipelineError::Config(format!(
                    "checkpoint was trained with {:?}, config has {:?}",
                    ck.sgd, cfg.sgd
                )));
            }
            if layout.train_log().is_file() {
                for line in read_text(&layout.train_log())?.lines() {
                    let Some(e) = log_value(line, "epoch") else { continue };
                    if e as u32 > ck.epoch {
                        break;
                    }
                    let f = log_value(line, "test_f_micro").unwrap_or(0.0);
                    if best.is_none_or(|(bf, _)| f > bf || test_set.is_none()) {
                        best = Some((f, e as u32));
                    }
                    log_lines.push(line.to_owned());
                }
            }
            info!("resume_from={} epoch={}", path.display(), ck.epoch);
            (ck.params, ck.epoch)
        }
        None => (arch.init_params::<f32>(cfg.sgd.seed)?, 0),
    };

    std::fs::create_dir_all(layout.checkpoint_dir()).map_err(super::io_err(&layout.checkpoint_dir()))?;
    let mut epochs = Vec::new();
    for epoch in start + 1..=cfg.sgd.epochs as u32 {
        let train_loss = train_epoch(&arch, &cfg.sgd, &mut params, &train_set, epoch)?;
        let test = test_set
            .as_ref()
            .map(|t| evaluate_params(&arch, &params, t, cfg.eval_threshold))
            .transpose()?;
        let stats = EpochStats {
            epoch,
            train_loss,
            test,
        };
        info!("{}", stats.log_line());
        log_lines.push(stats.log_line());
        write_file(
            &layout.train_log(),
            log_lines.iter().map(|l| format!("{l}\n")).collect::<String>(),
        )?;

        let ck = Checkpoint {
            params: params.clone(),
            sgd: cfg.sgd.clone(),
            epoch,
        };
        write_checkpoint(&layout.epoch_checkpoint(epoch), &ck)?;
        let f = stats.test.as_ref().map_or(0.0, |r| r.f_micro);
        if best.is_none_or(|(bf, _)| f > bf || stats.test.is_none()) {
            best = Some((f, epoch));
            write_checkpoint(&layout.best_checkpoint(), &ck)?;
            if let Some(r) = &stats.test {
                write_file(
                    &layout.report("cnn_best"),
                    r.to_text("Audio + CNN", &train_set.manifest.classes),
                )?;
            }
        }
        epochs.push(stats);
    }
    Ok(TrainSummary {
        epochs,
        best_epoch: best.map(|(_, e)| e),
    })
}

/// Scores a checkpoint on a manifest and writes `reports/cnn_<manifest>.txt`.
pub fn evaluate_checkpoint(cfg: &RunConfig, checkpoint: &Path, manifest: &Path) -> Result<EvalReport> {
    let ck = read_checkpoint(checkpoint)?;
    let clips = ManifestClips::open(manifest)?;
    let arch = cfg.network(clips.manifest.classes.len());
    arch.check_params(&ck.params)?;
    let report = evaluate_params(&arch, &ck.params, &clips, cfg.eval_threshold)?;
    let stem = manifest
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("manifest")
        .trim_end_matches("_manifest");
    write_file(
        &OutputLayout::new(&cfg.output_dir).report(&format!("cnn_{stem}")),
        report.to_text("Audio + CNN", &clips.manifest.classes),
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_set() -> InMemoryClips {
        InMemoryClips {
            ids: (0..5).map(|i| format!("c{i}")).collect(),
            samples: (0..5)
                .map(|i| (0..64).map(|t| ((t * (i + 1)) as f32 * 0.1).sin()).collect())
                .collect(),
            labels: (0..5).map(|i| vec![(i % 2) as u8, 1]).collect(),
        }
    }

    #[test]
    fn identical_seeds_give_identical_losses() {
        let arch = Architecture::reduced(64, 2, 0.5);
        let sgd = SgdConfig {
            learning_rate: 0.05,
            batch_size: 2,
            epochs: 3,
            seed: 4,
        };
        let run = || {
            let mut p = arch.init_params::<f32>(1).unwrap();
            let losses = train_epochs(&arch, &sgd, &mut p, &tiny_set(), 0..3).unwrap();
            (losses, p)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn split_run_matches_uninterrupted_run() {
        let arch = Architecture::reduced(64, 2, 0.5);
        let sgd = SgdConfig {
            learning_rate: 0.05,
            batch_size: 2,
            epochs: 4,
            seed: 11,
        };
        let mut whole = arch.init_params::<f32>(3).unwrap();
        let all = train_epochs(&arch, &sgd, &mut whole, &tiny_set(), 0..4).unwrap();
        let mut part = arch.init_params::<f32>(3).unwrap();
        let mut losses = train_epochs(&arch, &sgd, &mut part, &tiny_set(), 0..2).unwrap();
        losses.extend(train_epochs(&arch, &sgd, &mut part, &tiny_set(), 2..4).unwrap());
        assert_eq!(losses, all);
        assert_eq!(part, whole);
    }

    #[test]
    fn wrong_clip_length_names_the_clip() {
        let arch = Architecture::reduced(100, 2, 0.5);
        let mut p = arch.init_params::<f32>(0).unwrap();
        let err = train_epoch(&arch, &SgdConfig::default(), &mut p, &tiny_set(), 1).unwrap_err();
        assert!(err.to_string().contains("clip c"), "{err}");
    }

    #[test]
    fn log_values_parse() {
        assert_eq!(
            log_value("epoch=3 train_loss=0.5 test_f_micro=0.25", "test_f_micro"),
            Some(0.25)
        );
        assert_eq!(log_value("epoch=3", "test_f_micro"), None);
    }
}
