//! First-layer filter analysis: magnitude spectra sorted by dominant frequency
//! and smoothed time-domain filters.

use std::fmt::Write as _;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{write_file, PipelineError, Result};
use crate::nn::read_checkpoint;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpectrum {
    pub filter_index: usize,
    /// `fft_len / 2 + 1` magnitudes of the zero-padded filter.
    pub magnitudes: Vec<f64>,
    /// Index of the largest magnitude (first one on ties).
    pub dominant_bin: usize,
    /// Magnitudes mapped to `[0, 1]` by min and range; all zeros when flat.
    pub rescaled: Vec<f64>,
}

fn rescale(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        values.iter().map(|v| (v - min) / (max - min)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Spectra of `filters`, zero-padded to the next power of two, sorted
/// ascending by dominant bin (stable, so equal bins keep filter order).
pub fn filter_spectra(filters: &[Vec<f64>]) -> Vec<FilterSpectrum> {
    let Some(len) = filters.iter().map(Vec::len).max() else {
        return Vec::new();
    };
    let fft_len = len.next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(fft_len);
    let mut spectra: Vec<FilterSpectrum> = filters
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut buf: Vec<Complex<f64>> = f.iter().map(|&x| Complex::new(x, 0.0)).collect();
            buf.resize(fft_len, Complex::new(0.0, 0.0));
            fft.process(&mut buf);
            let magnitudes: Vec<f64> = buf[..fft_len / 2 + 1].iter().map(|c| c.norm()).collect();
            let dominant_bin = magnitudes
                .iter()
                .enumerate()
                .fold(0, |best, (k, &m)| if m > magnitudes[best] { k } else { best });
            FilterSpectrum {
                filter_index: i,
                rescaled: rescale(&magnitudes),
                magnitudes,
                dominant_bin,
            }
        })
        .collect();
    spectra.sort_by_key(|s| s.dominant_bin);
    spectra
}

/// 5-point centered moving average; the window is truncated at the ends.
pub fn moving_average_5(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            let w = &x[t.saturating_sub(2)..(t + 3).min(x.len())];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// Binary PGM (P5, maxval 255) with one image row per input row; values are
/// expected in `[0, 1]`.
pub fn pgm_bytes(rows: &[Vec<f64>]) -> Vec<u8> {
    let width = rows.first().map_or(0, Vec::len);
    let mut out = format!("P5\n{width} {}\n255\n", rows.len()).into_bytes();
    for row in rows {
        out.extend(row.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    out
}

fn csv(rows: impl IntoIterator<Item = impl AsRef<[f64]>>) -> String {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for v in row.as_ref() {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v:.6}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterAnalysis {
    /// Sorted by dominant bin.
    pub spectra: Vec<FilterSpectrum>,
    /// Smoothed time-domain filters, in the same order as `spectra`.
    pub smoothed: Vec<Vec<f64>>,
    pub fft_len: usize,
}

/// Analyzes the first layer of a checkpoint and writes into `out_dir`:
/// `spectra.csv` (rescaled magnitudes, one sorted row per filter),
/// `spectra.pgm`, `smoothed.csv` and `order.csv` (rank, filter index,
/// dominant bin, dominant frequency in Hz).
pub fn analyze_filters(checkpoint: &Path, out_dir: &Path) -> Result<FilterAnalysis> {
    let ck = read_checkpoint(checkpoint)?;
    let first = ck
        .params
        .layers
        .first()
        .ok_or_else(|| PipelineError::Data("checkpoint has no layers".into()))?;
    let shape = first.weights.shape();
    if shape.len() != 3 || shape[1] != 1 {
        return Err(PipelineError::Data(format!(
            "first layer weights have shape {shape:?}, expected [maps, 1, filter]"
        )));
    }
    let filters: Vec<Vec<f64>> = first
        .weights
        .data()
        .chunks_exact(shape[2])
        .map(|f| f.iter().map(|&w| w as f64).collect())
        .collect();
    let spectra = filter_spectra(&filters);
    let smoothed: Vec<Vec<f64>> = spectra
        .iter()
        .map(|s| moving_average_5(&filters[s.filter_index]))
        .collect();
    let fft_len = shape[2].next_power_of_two();

    let rescaled: Vec<Vec<f64>> = spectra.iter().map(|s| s.rescaled.clone()).collect();
    write_file(&out_dir.join("spectra.csv"), csv(&rescaled))?;
    write_file(&out_dir.join("spectra.pgm"), pgm_bytes(&rescaled))?;
    write_file(&out_dir.join("smoothed.csv"), csv(&smoothed))?;
    let mut order = String::from("rank,filter_index,dominant_bin,dominant_hz\n");
    for (rank, s) in spectra.iter().enumerate() {
        let hz = s.dominant_bin as f64 * crate::SAMPLE_RATE as f64 / fft_len as f64;
        let _ = writeln!(order, "{rank},{},{},{hz:.3}", s.filter_index, s.dominant_bin);
    }
    write_file(&out_dir.join("order.csv"), order)?;
    Ok(FilterAnalysis {
        spectra,
        smoothed,
        fft_len,
    })
}
