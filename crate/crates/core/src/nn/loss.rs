use super::NnError;
use crate::tensor::{Scalar, Tensor};

/// Predictions are clamped to `[BCE_EPSILON, 1 - BCE_EPSILON]` before the log.
pub const BCE_EPSILON: f64 = 1e-7;

/// Mean binary cross-entropy over the label dimension and its gradient with
/// respect to the (clamped) predictions.
///
/// The loss is accumulated in `f64` whatever the tensor element type.
pub fn bce_loss<T: Scalar>(predictions: &Tensor<T>, targets: &Tensor<T>) -> Result<(f64, Tensor<T>), NnError> {
    if predictions.shape() != targets.shape() {
        return Err(NnError::Shape(format!(
            "predictions {:?} vs targets {:?}",
            predictions.shape(),
            targets.shape()
        )));
    }
    let n = predictions.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(predictions.len());
    for (i, (&p, &y)) in predictions.data().iter().zip(targets.data()).enumerate() {
        let y = y.to_f64_lossy();
        if y != 0.0 && y != 1.0 {
            return Err(NnError::InvalidParameter(format!("target {i} is {y}, expected 0 or 1")));
        }
        let p = p.to_f64_lossy().clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad.push(T::from_f64_lossy((-y / p + (1.0 - y) / (1.0 - p)) / n));
    }
    Ok((loss / n, Tensor::new(predictions.shape().to_vec(), grad)?))
}
