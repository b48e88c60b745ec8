//! Regression deltas and the Gaussian clip summary.

use super::FeatureError;

/// Half-width of the delta regression window.
pub const DELTA_WIDTH: usize = 2;

/// Regression delta over time of a `[frames][dims]` matrix:
/// `d[t] = sum_{n=1..N} n (c[t+n] - c[t-n]) / (2 sum n^2)`, with frame indices
/// clamped to the valid range.
pub fn delta(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let frames = x.len();
    let n = DELTA_WIDTH as i64;
    let denom = 2.0 * (1..=n).map(|k| (k * k) as f64).sum::<f64>();
    let at = |t: i64| &x[t.clamp(0, frames as i64 - 1) as usize];
    (0..frames as i64)
        .map(|t| {
            let mut out = vec![0.0; x[t as usize].len()];
            for k in 1..=n {
                let (fwd, back) = (at(t + k), at(t - k));
                for (o, (a, b)) in out.iter_mut().zip(fwd.iter().zip(back)) {
                    *o += k as f64 * (a - b);
                }
            }
            out.iter_mut().for_each(|o| *o /= denom);
            out
        })
        .collect()
}

/// First and second order deltas.
pub fn deltas(x: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d1 = delta(x);
    let d2 = delta(&d1);
    (d1, d2)
}

/// Mean and unbiased covariance of the frames (rows) of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    /// Upper triangle of the covariance, row by row: `(0,0), (0,1), ..,
    /// (0,d-1), (1,1), ..`.
    pub cov_upper: Vec<f64>,
}

impl GaussianSummary {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    /// Covariance entry `(i, j)` in either order.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let d = self.dims();
        self.cov_upper[i * d - i * (i + 1) / 2 + j]
    }

    /// `mean || cov_upper`.
    pub fn to_vector(&self) -> Vec<f64> {
        self.mean.iter().chain(&self.cov_upper).copied().collect()
    }
}

/// Length of the flattened summary of `d`-dimensional frames.
pub fn summary_len(d: usize) -> usize {
    d + d * (d + 1) / 2
}

pub fn gaussian_fit(x: &[Vec<f64>]) -> Result<GaussianSummary, FeatureError> {
    let frames = x.len();
    if frames < 2 {
        return Err(FeatureError::TooFewFrames(frames));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(FeatureError::Shape("frames differ in width".into()));
    }
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= frames as f64);
    let centered: Vec<Vec<f64>> = x
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut cov_upper = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            let s: f64 = centered.iter().map(|r| r[i] * r[j]).sum();
            cov_upper.push(s / (frames - 1) as f64);
        }
    }
    Ok(GaussianSummary { mean, cov_upper })
}

/// Concatenates `[a | b | c]` frame by frame.
pub fn stack(a: &[Vec<f64>], b: &[Vec<f64>], c: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| x.iter().chain(y).chain(z).copied().collect())
        .collect()
}
