//! Short-time MFCCs: Hann window, FFT magnitude, triangular mel filterbank,
//! log, orthonormal DCT-II.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::FeatureError;

/// Added to filterbank energies before the log.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfccConfig {
    pub frame_size: usize,
    pub hop: usize,
    pub mel_bands: usize,
    pub num_coeffs: usize,
    pub sample_rate: u32,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_size: 2048,
            hop: 512,
            mel_bands: 40,
            num_coeffs: 13,
            sample_rate: crate::SAMPLE_RATE,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::Config(m));
        if !self.frame_size.is_power_of_two() || self.frame_size < 2 {
            return bad(format!("frame size {} is not a power of two", self.frame_size));
        }
        if self.hop == 0 {
            return bad("hop must be positive".into());
        }
        if self.num_coeffs == 0 || self.num_coeffs > self.mel_bands {
            return bad(format!(
                "{} coefficients from {} mel bands",
                self.num_coeffs, self.mel_bands
            ));
        }
        if self.sample_rate == 0 {
            return bad("sample rate must be positive".into());
        }
        Ok(())
    }

    /// Number of full frames in `len` samples (no padding).
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_size {
            0
        } else {
            (len - self.frame_size) / self.hop + 1
        }
    }

    pub fn num_bins(&self) -> usize {
        self.frame_size / 2 + 1
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Left edge, center and right edge in Hz of every filter: `bands + 2` points
/// equally spaced in mel from 0 to Nyquist.
pub fn mel_band_edges(bands: usize, sample_rate: u32) -> Vec<f64> {
    let top = hz_to_mel(sample_rate as f64 / 2.0);
    (0..bands + 2)
        .map(|i| mel_to_hz(top * i as f64 / (bands + 1) as f64))
        .collect()
}

/// Triangular filterbank `[bands][bins]` over the bins of a `frame_size` FFT.
pub fn mel_filterbank(bands: usize, frame_size: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let edges = mel_band_edges(bands, sample_rate);
    let bins = frame_size / 2 + 1;
    (0..bands)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * sample_rate as f64 / frame_size as f64;
                    if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II basis, `[n][n]`: row `k` is
/// `s_k cos(pi k (m + 1/2) / n)` with `s_0 = sqrt(1/n)`, `s_k = sqrt(2/n)`.
pub fn dct_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let s = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            (0..n)
                .map(|m| s * (PI * k as f64 * (m as f64 + 0.5) / n as f64).cos())
                .collect()
        })
        .collect()
}

/// Periodic Hann window.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Reusable MFCC extractor holding the window, filterbank, DCT and FFT plan.
pub struct MfccExtractor {
    cfg: MfccConfig,
    window: Vec<f64>,
    filterbank: Vec<Vec<f64>>,
    dct: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("cfg", &self.cfg)
            .finish_non_exhaustive()
    }
}

impl MfccExtractor {
    pub fn new(cfg: MfccConfig) -> Result<Self, FeatureError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            window: hann_window(cfg.frame_size),
            filterbank: mel_filterbank(cfg.mel_bands, cfg.frame_size, cfg.sample_rate),
            dct: dct_matrix(cfg.mel_bands),
            fft: FftPlanner::new().plan_fft_forward(cfg.frame_size),
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    /// Magnitude spectrum (`frame_size/2 + 1` bins) of one windowed frame.
    pub fn magnitude_spectrum(&self, frame: &[f32]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(&x, &w)| Complex::new(x as f64 * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        buf[..self.cfg.num_bins()].iter().map(|c| c.norm()).collect()
    }

    /// Filterbank energies of one frame.
    pub fn mel_energies(&self, frame: &[f32]) -> Vec<f64> {
        let spectrum = self.magnitude_spectrum(frame);
        self.filterbank
            .iter()
            .map(|row| row.iter().zip(&spectrum).map(|(w, s)| w * s).sum())
            .collect()
    }

    /// `[frames][num_coeffs]` MFCC matrix.
    pub fn mfcc(&self, samples: &[f32]) -> Result<Vec<Vec<f64>>, FeatureError> {
        let frames = self.cfg.num_frames(samples.len());
        if frames == 0 {
            return Err(FeatureError::TooShort {
                samples: samples.len(),
                frame_size: self.cfg.frame_size,
            });
        }
        Ok((0..frames)
            .map(|t| {
                let start = t * self.cfg.hop;
                let log_mel: Vec<f64> = self
                    .mel_energies(&samples[start..start + self.cfg.frame_size])
                    .into_iter()
                    .map(|e| (e + LOG_FLOOR).ln())
                    .collect();
                self.dct[..self.cfg.num_coeffs]
                    .iter()
                    .map(|basis| basis.iter().zip(&log_mel).map(|(b, x)| b * x).sum())
                    .collect()
            })
            .collect())
    }
}

/// One-shot MFCC computation.
pub fn mfcc(samples: &[f32], cfg: &MfccConfig) -> Result<Vec<Vec<f64>>, FeatureError> {
    MfccExtractor::new(*cfg)?.mfcc(samples)
}
