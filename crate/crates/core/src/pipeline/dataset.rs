//! Dataset preparation: taxonomy, track split, clip slicing and labeling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::{io_err, read_text, write_file, OutputLayout, PipelineError, Result, RunConfig};
use crate::audio::{write_manifest, AudioError, ClipReader, Manifest, ManifestEntry, WavLayout};
use crate::labeling::{
    build_taxonomy, collapse_labels, stratified_split, ActivationTable, LabelError, SmoothedActivations, Taxonomy,
    TaxonomyMap,
};
use crate::{CLIP_SAMPLES, SAMPLE_RATE};

/// Track id of a mix file: the file stem without a trailing `_MIX`. `None`
/// for files that are not `.wav`.
pub fn track_id_from_path(path: &Path) -> Option<String> {
    let ext = path.extension()?.to_str()?;
    if !ext.eq_ignore_ascii_case("wav") {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    Some(stem.strip_suffix("_MIX").unwrap_or(stem).to_owned())
}

/// `<id>_ACTIVATION_CONF.lab`, else `<id>_ACTIVATION_CONF.csv`.
pub fn find_activation_file(dir: &Path, track_id: &str) -> Option<PathBuf> {
    ["lab", "csv"]
        .iter()
        .map(|ext| dir.join(format!("{track_id}_ACTIVATION_CONF.{ext}")))
        .find(|p| p.is_file())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub classes: Vec<String>,
    pub train_tracks: Vec<String>,
    pub test_tracks: Vec<String>,
    pub train_clips: usize,
    pub test_clips: usize,
    /// Tracks without an activation file.
    pub skipped_tracks: Vec<String>,
    /// Clips outside the annotated time range, left out of the manifests.
    pub dropped_clips: usize,
}

impl PrepareSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "classes={}", self.classes.join(","));
        let _ = writeln!(out, "train_tracks={}", self.train_tracks.len());
        let _ = writeln!(out, "test_tracks={}", self.test_tracks.len());
        let _ = writeln!(out, "train_clips={}", self.train_clips);
        let _ = writeln!(out, "test_clips={}", self.test_clips);
        let _ = writeln!(out, "skipped_tracks={}", self.skipped_tracks.join(","));
        let _ = writeln!(out, "dropped_clips={}", self.dropped_clips);
        out
    }
}

struct Track {
    id: String,
    path: PathBuf,
    layout: WavLayout,
    table: ActivationTable,
}

fn load_tracks(cfg: &RunConfig) -> Result<(Vec<Track>, Vec<String>)> {
    let audio_dir = cfg.audio_dir.canonicalize().map_err(io_err(&cfg.audio_dir))?;
    let mut files: Vec<(String, PathBuf)> = std::fs::read_dir(&audio_dir)
        .map_err(io_err(&audio_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter_map(|p| track_id_from_path(&p).map(|id| (id, p)))
        .collect();
    files.sort();
    if let Some(w) = files.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(PipelineError::Data(format!(
            "two audio files share the track id {}",
            w[0].0
        )));
    }
    let reader = ClipReader::new();
    let mut tracks = Vec::new();
    let mut skipped = Vec::new();
    for (id, path) in files {
        let Some(act) = find_activation_file(&cfg.activation_dir, &id) else {
            warn!("track={id} skipped=missing_activation_file");
            skipped.push(id);
            continue;
        };
        let table = ActivationTable::parse_csv(&id, &read_text(&act)?)?;
        let layout = reader.layout(&path)?;
        if layout.sample_rate != SAMPLE_RATE {
            return Err(AudioError::SampleRate {
                found: layout.sample_rate,
                expected: SAMPLE_RATE,
            }
            .into());
        }
        tracks.push(Track {
            id,
            path,
            layout,
            table,
        });
    }
    Ok((tracks, skipped))
}

fn load_taxonomy_map(cfg: &RunConfig) -> Result<TaxonomyMap> {
    match &cfg.taxonomy_file {
        Some(p) => Ok(TaxonomyMap::parse(&read_text(p)?)?),
        None => Ok(TaxonomyMap::default_medleydb()),
    }
}

/// Clip manifest entries of one track, plus the number of clips dropped for
/// lying outside the annotation.
fn label_track(track: &Track, taxonomy: &Taxonomy, cfg: &RunConfig) -> Result<(Vec<ManifestEntry>, usize)> {
    let smoothed = SmoothedActivations::new(&track.table, cfg.label_window)?;
    let clips = track.layout.frames() / CLIP_SAMPLES;
    let clip_bytes = (CLIP_SAMPLES * track.layout.block_align) as u64;
    let mut entries = Vec::with_capacity(clips);
    let mut dropped = 0;
    for i in 0..clips {
        let raw = match smoothed.clip_label(i as f64, (i + 1) as f64, cfg.label_threshold) {
            Ok(raw) => raw,
            Err(e @ LabelError::ClipOutOfRange { .. }) => {
                warn!("track={} clip={i} dropped=\"{e}\"", track.id);
                dropped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        entries.push(ManifestEntry {
            track_id: track.id.clone(),
            clip_index: i,
            source_path: track.path.clone(),
            byte_offset: track.layout.data_offset + i as u64 * clip_bytes,
            labels: collapse_labels(&raw, &track.table.columns, taxonomy)?,
        });
    }
    Ok((entries, dropped))
}

/// Builds the taxonomy from the annotated instruments of every track, splits
/// tracks into train/test by their labels, and writes the resolved taxonomy,
/// track lists and clip manifests. Tracks without an activation file are
/// logged and skipped.
pub fn prepare_dataset(cfg: &RunConfig) -> Result<PrepareSummary> {
    cfg.validate()?;
    let layout = OutputLayout::new(&cfg.output_dir);
    let (tracks, skipped_tracks) = load_tracks(cfg)?;
    if tracks.is_empty() {
        return Err(PipelineError::Data(format!(
            "no tracks with activation files under {}",
            cfg.audio_dir.display()
        )));
    }

    let map = load_taxonomy_map(cfg)?;
    let instruments: Vec<BTreeSet<String>> = tracks
        .iter()
        .map(|t| t.table.columns.iter().cloned().collect())
        .collect();
    let taxonomy = build_taxonomy(&map, &instruments, cfg.min_songs);
    info!("classes={}", taxonomy.classes.join(","));
    write_file(&layout.taxonomy(), taxonomy.to_text())?;

    let mut per_track: BTreeMap<String, Vec<ManifestEntry>> = BTreeMap::new();
    let mut track_labels: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut dropped_clips = 0;
    for track in &tracks {
        let (entries, dropped) = label_track(track, &taxonomy, cfg)?;
        dropped_clips += dropped;
        let mut any = vec![0u8; taxonomy.num_classes()];
        for e in &entries {
            for (a, &b) in any.iter_mut().zip(&e.labels) {
                *a |= b;
            }
        }
        track_labels.insert(track.id.clone(), any);
        per_track.insert(track.id.clone(), entries);
    }

    let split = stratified_split(&track_labels, cfg.test_fraction, cfg.split_seed)?;
    let mut counts = [0usize; 2];
    for (side, (name, ids)) in [("train", &split.train), ("test", &split.test)].into_iter().enumerate() {
        let manifest = Manifest {
            classes: taxonomy.classes.clone(),
            entries: ids.iter().flat_map(|id| per_track[id].iter().cloned()).collect(),
        };
        counts[side] = manifest.entries.len();
        write_file(
            &layout.tracks(name),
            ids.iter().map(|id| format!("{id}\n")).collect::<String>(),
        )?;
        write_manifest(&layout.manifest(name), &manifest)?;
    }
    let summary = PrepareSummary {
        classes: taxonomy.classes.clone(),
        train_tracks: split.train,
        test_tracks: split.test,
        train_clips: counts[0],
        test_clips: counts[1],
        skipped_tracks,
        dropped_clips,
    };
    write_file(&layout.root.join("prepare_report.txt"), summary.to_text())?;
    info!(
        "train_tracks={} test_tracks={} train_clips={} test_clips={} skipped_tracks={}",
        summary.train_tracks.len(),
        summary.test_tracks.len(),
        summary.train_clips,
        summary.test_clips,
        summary.skipped_tracks.len()
    );
    Ok(summary)
}
