//! One-vs-rest logistic regression on standardized features.

use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
        }
    }
}

/// Per-dimension z-scoring fitted on training data. Dimensions whose training
/// standard deviation is zero are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub input_dims: usize,
}

impl Standardizer {
    pub fn fit(features: &[Vec<f64>]) -> Result<Self, FeatureError> {
        let dims = check_matrix(features)?;
        let n = features.len() as f64;
        let mut kept = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for j in 0..dims {
            let m = features.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = features.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 0.0 && s.is_finite() {
                kept.push(j);
                mean.push(m);
                std.push(s);
            }
        }
        Ok(Self {
            kept,
            mean,
            std,
            input_dims: dims,
        })
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if row.len() != self.input_dims {
            return Err(FeatureError::Shape(format!(
                "feature row has {} dims, model expects {}",
                row.len(),
                self.input_dims
            )));
        }
        Ok(self
            .kept
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&j, (m, s))| (row[j] - m) / s)
            .collect())
    }
}

/// One weight vector and bias per label, over the kept dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub standardizer: Standardizer,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_matrix(features: &[Vec<f64>]) -> Result<usize, FeatureError> {
    let first = features.first().ok_or(FeatureError::Empty)?;
    let dims = first.len();
    if features.iter().any(|r| r.len() != dims) {
        return Err(FeatureError::Shape("feature rows differ in length".into()));
    }
    Ok(dims)
}

pub(crate) fn check_labels(labels: &[Vec<u8>], rows: usize) -> Result<usize, FeatureError> {
    if labels.len() != rows {
        return Err(FeatureError::Shape(format!(
            "{} label rows for {rows} feature rows",
            labels.len()
        )));
    }
    let width = labels.first().map_or(0, Vec::len);
    if labels.iter().any(|l| l.len() != width || l.iter().any(|&b| b > 1)) {
        return Err(FeatureError::Shape("labels must be equal-width 0/1 rows".into()));
    }
    Ok(width)
}

impl LogisticModel {
    pub fn num_labels(&self) -> usize {
        self.weights.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let z = self.standardizer.transform(row)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| sigmoid(w.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>() + b))
            .collect())
    }
}

/// Full-batch gradient descent on the mean binary cross-entropy, one
/// independent model per label, from zero weights.
pub fn logistic_train(
    features: &[Vec<f64>],
    labels: &[Vec<u8>],
    cfg: &LogisticConfig,
) -> Result<LogisticModel, FeatureError> {
    check_matrix(features)?;
    let num_labels = check_labels(labels, features.len())?;
    let standardizer = Standardizer::fit(features)?;
    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|r| standardizer.transform(r))
        .collect::<Result<_, _>>()?;
    let d = standardizer.kept.len();
    let n = z.len() as f64;
    let mut weights = vec![vec![0.0; d]; num_labels];
    let mut bias = vec![0.0; num_labels];
    for (l, (w, b)) in weights.iter_mut().zip(bias.iter_mut()).enumerate() {
        let mut grad = vec![0.0; d];
        for _ in 0..cfg.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (row, y) in z.iter().zip(labels) {
                let p = sigmoid(w.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + *b);
                let err = p - y[l] as f64;
                for (g, x) in grad.iter_mut().zip(row) {
                    *g += err * x;
                }
                grad_b += err;
            }
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= cfg.learning_rate * g / n;
            }
            *b -= cfg.learning_rate * grad_b / n;
        }
    }
    Ok(LogisticModel {
        standardizer,
        weights,
        bias,
    })
}

pub fn logistic_predict(model: &LogisticModel, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FeatureError> {
    features.iter().map(|r| model.predict_row(r)).collect()
}
