//! Synthetic corpora on disk and helpers for comparing output trees.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use icnn_core::nn::{Architecture, Checkpoint, LayerSpec, ModelParams, SgdConfig};
use icnn_core::pipeline::{make_synthetic_corpus, ArchKind, RunConfig, SyntheticOptions, SyntheticTrack};

/// Writes a corpus under `dir` and returns a reduced-network config whose
/// outputs go to `dir/<out>`.
pub fn synthetic_run(dir: &Path, out: &str, opts: &SyntheticOptions) -> (RunConfig, Vec<SyntheticTrack>) {
    let tracks = make_synthetic_corpus(dir, opts).unwrap();
    let mut cfg = RunConfig {
        audio_dir: dir.join("audio"),
        activation_dir: dir.join("activations"),
        output_dir: dir.join(out),
        min_songs: (opts.tracks / 4).max(1),
        architecture: ArchKind::Reduced,
        ..RunConfig::default()
    };
    cfg.sgd.epochs = 2;
    cfg.sgd.batch_size = 8;
    cfg.forest.trees = 10;
    cfg.logistic.epochs = 50;
    (cfg, tracks)
}

/// Every file under `root`, keyed by its path relative to `root`.
pub fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Names of the files whose contents differ, or that exist on one side only.
pub fn tree_differences(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    a.keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// A first layer of long filters, each a cosine at an exact FFT bin.
pub fn planted_checkpoint(bins: &[usize], filter: usize) -> Checkpoint {
    let arch = Architecture {
        input_channels: 1,
        input_length: filter + 99,
        layers: vec![
            LayerSpec::TemporalConv {
                feature_maps: bins.len(),
                filter_size: filter,
            },
            LayerSpec::MaxPool1d { size: 4, stride: 4 },
            LayerSpec::Relu,
            LayerSpec::FullyConnected { output_size: 11 },
            LayerSpec::Sigmoid,
        ],
    };
    let mut params: ModelParams<f32> = arch.init_params(1).unwrap();
    let fft_len = filter.next_power_of_two();
    let w = params.layers[0].weights.data_mut();
    for (m, &k) in bins.iter().enumerate() {
        for t in 0..filter {
            w[m * filter + t] = (0.05 * (2.0 * PI * k as f64 * t as f64 / fft_len as f64).cos()) as f32;
        }
    }
    Checkpoint {
        params,
        sgd: SgdConfig::default(),
        epoch: 1,
    }
}
