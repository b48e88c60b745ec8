//! Brute-force reference implementations written straight from the defining
//! formulas, independent of the library code paths.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `[hamming, exact, precision, recall, f_micro, f_macro]`, looping label by
/// label over every clip.
pub fn brute_metrics(pred: &[Vec<u8>], truth: &[Vec<u8>]) -> [f64; 6] {
    let n = truth.len();
    let labels = truth[0].len();
    let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    let (mut tp, mut fp, mut fneg, mut same) = (0u64, 0u64, 0u64, 0u64);
    let mut macro_sum = 0.0;
    for l in 0..labels {
        let (mut ltp, mut lfp, mut lfn) = (0u64, 0u64, 0u64);
        for i in 0..n {
            let (p, t) = (pred[i][l], truth[i][l]);
            if p == t {
                same += 1;
            }
            if p == 1 && t == 1 {
                ltp += 1;
            }
            if p == 1 && t == 0 {
                lfp += 1;
            }
            if p == 0 && t == 1 {
                lfn += 1;
            }
        }
        tp += ltp;
        fp += lfp;
        fneg += lfn;
        macro_sum += f1(div(ltp, ltp + lfp), div(ltp, ltp + lfn));
    }
    let exact = (0..n).filter(|&i| pred[i] == truth[i]).count() as u64;
    let p = div(tp, tp + fp);
    let r = div(tp, tp + fneg);
    [
        div(same, (n * labels) as u64),
        div(exact, n as u64),
        p,
        r,
        f1(p, r),
        macro_sum / labels as f64,
    ]
}

/// Label of one instrument for `[start, end)`: the maximum over grid times in
/// the interval of the mean of every sample `j` with
/// `k - w/2 <= j < k - w/2 + w`, compared with `threshold`.
pub fn brute_clip_label(times: &[f64], conf: &[f64], window_seconds: f64, start: f64, end: f64, threshold: f64) -> u8 {
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let w = (window_seconds / step).round() as i64;
    let mut best = f64::NEG_INFINITY;
    for (k, &t) in times.iter().enumerate() {
        if t < start - 1e-9 || t >= end - 1e-9 {
            continue;
        }
        let lo = k as i64 - w / 2;
        let mut sum = 0.0;
        let mut count = 0;
        for (j, &c) in conf.iter().enumerate() {
            if (j as i64) >= lo && (j as i64) < lo + w {
                sum += c;
                count += 1;
            }
        }
        best = best.max(sum / count as f64);
    }
    u8::from(best >= threshold)
}

/// Regression delta with N = 2 written out term by term.
pub fn brute_delta(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let last = x.len() as i64 - 1;
    let c = |t: i64, d: usize| x[t.clamp(0, last) as usize][d];
    (0..x.len() as i64)
        .map(|t| {
            (0..x[0].len())
                .map(|d| (1.0 * (c(t + 1, d) - c(t - 1, d)) + 2.0 * (c(t + 2, d) - c(t - 2, d))) / 10.0)
                .collect()
        })
        .collect()
}

/// Unbiased covariance via `E[xy] - E[x]E[y]` scaled by n/(n-1).
pub fn brute_covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let d = x[0].len();
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let exy = x.iter().map(|r| r[i] * r[j]).sum::<f64>() / n;
                    (exy - mean[i] * mean[j]) * n / (n - 1.0)
                })
                .collect()
        })
        .collect()
}

/// Output length of a valid convolution and of a max pool.
pub fn conv_len(input: usize, filter: usize) -> usize {
    input - filter + 1
}

pub fn pool_len(input: usize, size: usize, stride: usize) -> usize {
    (input - size) / stride + 1
}

/// Mel scale used by the oracle.
pub fn mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Index of the mel filter whose center frequency is nearest `hz`.
pub fn nearest_mel_filter(hz: f64, bands: usize, sample_rate: f64) -> usize {
    let top = mel(sample_rate / 2.0);
    (0..bands)
        .min_by(|&a, &b| {
            let ca = inv_mel(top * (a + 1) as f64 / (bands + 1) as f64);
            let cb = inv_mel(top * (b + 1) as f64 / (bands + 1) as f64);
            (ca - hz).abs().total_cmp(&(cb - hz).abs())
        })
        .unwrap()
}

/// A random activation table: uniform grid with a random step, random
/// confidences including long plateaus, exact 0.5 values and spikes.
pub struct RandomTable {
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    pub series: Vec<Vec<f64>>,
}

pub fn random_table(seed: u64) -> RandomTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = [0.01, 0.025, 0.04643990929705215, 0.05, 0.1][rng.gen_range(0..5)];
    let seconds: f64 = rng.gen_range(2.0..6.0);
    let rows = (seconds / step).ceil() as usize + 2;
    let t0 = if rng.gen_bool(0.5) { 0.0 } else { -step };
    let times: Vec<f64> = (0..rows).map(|i| t0 + i as f64 * step).collect();
    let cols = rng.gen_range(1..6);
    let series = (0..cols)
        .map(|_| {
            let mut level: f64 = rng.gen();
            (0..rows)
                .map(|_| {
                    match rng.gen_range(0..10) {
                        0 => level = rng.gen(),
                        1 => return 1.0,
                        2 => return 0.5,
                        _ => {}
                    }
                    level
                })
                .collect()
        })
        .collect();
    RandomTable {
        times,
        columns: (0..cols).map(|c| format!("inst{c}")).collect(),
        series,
    }
}

/// `tracks` random 11-bit label vectors with per-label rates between 5% and
/// 60%.
pub fn random_track_labels(tracks: usize, seed: u64) -> BTreeMap<String, Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates: Vec<f64> = (0..11).map(|_| rng.gen_range(0.05..0.6)).collect();
    (0..tracks)
        .map(|t| {
            (
                format!("track{t:03}"),
                rates.iter().map(|&p| u8::from(rng.gen_bool(p))).collect(),
            )
        })
        .collect()
}

/// Checks the split contract; returns the worst per-label deviation of the
/// test fraction from `fraction` over labels with at least 10 tracks.
pub fn check_split(
    labels: &BTreeMap<String, Vec<u8>>,
    train: &[String],
    test: &[String],
    fraction: f64,
) -> Result<f64, String> {
    let mut all: Vec<&String> = train.iter().chain(test).collect();
    all.sort();
    let before = all.len();
    all.dedup();
    if all.len() != before {
        return Err("a track is on both sides".into());
    }
    if all.len() != labels.len() || !all.iter().all(|t| labels.contains_key(*t)) {
        return Err("split is not exhaustive".into());
    }
    let width = labels.values().next().map_or(0, Vec::len);
    let mut worst: f64 = 0.0;
    for l in 0..width {
        let count = |side: &[String]| side.iter().filter(|t| labels[*t][l] == 1).count();
        let (a, b) = (count(train), count(test));
        if a + b >= 2 && (a == 0 || b == 0) {
            return Err(format!("label {l} with {} tracks is only on one side", a + b));
        }
        if a + b >= 10 {
            worst = worst.max((b as f64 / (a + b) as f64 - fraction).abs());
        }
    }
    Ok(worst)
}
