use rand::Rng;

use super::NnError;
use crate::tensor::{Scalar, Tensor};

fn axpy<T: Scalar>(dst: &mut [T], alpha: T, src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

// Eight independent partial sums so the compiler can vectorize; the reduction
// order is fixed, so results stay deterministic.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let chunks = n / 8;
    for (ca, cb) in a.chunks_exact(8).zip(b.chunks_exact(8)) {
        for i in 0..8 {
            acc[i] += ca[i] * cb[i];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

fn check_conv_shapes<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
) -> Result<(usize, usize, usize, usize), NnError> {
    if input.rank() != 2 || weights.rank() != 3 {
        return Err(NnError::Shape(format!(
            "conv expects input [channels, length] and weights [maps, channels, filter], got input {:?} and weights {:?}",
            input.shape(),
            weights.shape()
        )));
    }
    let (channels, length) = (input.shape()[0], input.shape()[1]);
    let (maps, w_channels, filter) = (weights.shape()[0], weights.shape()[1], weights.shape()[2]);
    if w_channels != channels {
        return Err(NnError::Shape(format!(
            "conv input {:?} has {channels} channels but weights {:?} expect {w_channels}",
            input.shape(),
            weights.shape()
        )));
    }
    if length < filter {
        return Err(NnError::Shape(format!(
            "conv input {:?} is shorter than the filter of weights {:?}",
            input.shape(),
            weights.shape()
        )));
    }
    Ok((channels, length, maps, filter))
}

/// Valid, stride-1 temporal convolution (cross-correlation):
/// `out[m, t] = bias[m] + sum_{c,k} input[c, t + k] * weights[m, c, k]`.
pub fn temporal_conv_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let (channels, length, maps, filter) = check_conv_shapes(input, weights)?;
    if bias.shape() != [maps] {
        return Err(NnError::Shape(format!(
            "conv bias {:?} does not match weights {:?}",
            bias.shape(),
            weights.shape()
        )));
    }
    let out_len = length - filter + 1;
    let mut out = Tensor::zeros(&[maps, out_len]);
    let w = weights.data();
    for m in 0..maps {
        let row = out.row_mut(m);
        row.fill(bias.data()[m]);
        for c in 0..channels {
            let x = input.row(c);
            let taps = &w[(m * channels + c) * filter..(m * channels + c + 1) * filter];
            for (k, &tap) in taps.iter().enumerate() {
                axpy(row, tap, &x[k..k + out_len]);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn temporal_conv_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>, NnError> {
    let (channels, length, maps, filter) = check_conv_shapes(input, weights)?;
    let out_len = length - filter + 1;
    if grad_out.shape() != [maps, out_len] {
        return Err(NnError::Shape(format!(
            "conv gradient {:?} does not match forward output [{maps}, {out_len}]",
            grad_out.shape()
        )));
    }
    let w = weights.data();
    let mut g_in = Tensor::zeros(input.shape());
    let mut g_w = Tensor::zeros(weights.shape());
    let mut g_b = Tensor::zeros(&[maps]);
    for m in 0..maps {
        let g = grad_out.row(m);
        g_b.data_mut()[m] = g.iter().copied().sum();
        for c in 0..channels {
            let base = (m * channels + c) * filter;
            let x = input.row(c);
            for k in 0..filter {
                g_w.data_mut()[base + k] = dot(g, &x[k..k + out_len]);
            }
            let gi = g_in.row_mut(c);
            for k in 0..filter {
                axpy(&mut gi[k..k + out_len], w[base + k], g);
            }
        }
    }
    Ok(ConvGrads {
        input: g_in,
        weights: g_w,
        bias: g_b,
    })
}

#[derive(Debug, Clone)]
pub struct PoolOutput<T> {
    pub output: Tensor<T>,
    /// Winning position (within its input row) for every output cell, laid out
    /// like `output`.
    pub argmax: Vec<usize>,
}

/// Max pooling along time; the first maximal position wins ties.
pub fn maxpool_forward<T: Scalar>(input: &Tensor<T>, size: usize, stride: usize) -> Result<PoolOutput<T>, NnError> {
    if size == 0 || stride == 0 {
        return Err(NnError::InvalidParameter(format!(
            "pool size {size} and stride {stride} must be positive"
        )));
    }
    if input.rank() != 2 {
        return Err(NnError::Shape(format!(
            "max pool expects [maps, length], got {:?}",
            input.shape()
        )));
    }
    let (maps, length) = (input.shape()[0], input.shape()[1]);
    if length < size {
        return Err(NnError::Shape(format!(
            "max pool input {:?} is shorter than pool size {size}",
            input.shape()
        )));
    }
    let out_len = (length - size) / stride + 1;
    let mut output = Tensor::zeros(&[maps, out_len]);
    let mut argmax = Vec::with_capacity(maps * out_len);
    for m in 0..maps {
        let x = input.row(m);
        let out = output.row_mut(m);
        for (t, o) in out.iter_mut().enumerate() {
            let start = t * stride;
            let mut best = start;
            for i in start + 1..start + size {
                if x[i] > x[best] {
                    best = i;
                }
            }
            *o = x[best];
            argmax.push(best);
        }
    }
    Ok(PoolOutput { output, argmax })
}

/// Routes each output gradient to its recorded argmax, accumulating where
/// overlapping windows share a winner.
pub fn maxpool_backward<T: Scalar>(
    argmax: &[usize],
    grad_out: &Tensor<T>,
    input_shape: &[usize],
) -> Result<Tensor<T>, NnError> {
    if input_shape.len() != 2 || grad_out.rank() != 2 || grad_out.shape()[0] != input_shape[0] {
        return Err(NnError::Shape(format!(
            "pool gradient {:?} incompatible with input shape {input_shape:?}",
            grad_out.shape()
        )));
    }
    if argmax.len() != grad_out.len() {
        return Err(NnError::Shape(format!(
            "{} argmax entries for pool gradient {:?}",
            argmax.len(),
            grad_out.shape()
        )));
    }
    let length = input_shape[1];
    let out_len = grad_out.shape()[1];
    let mut g_in = Tensor::zeros(input_shape);
    for m in 0..input_shape[0] {
        let g = grad_out.row(m);
        let idx = &argmax[m * out_len..(m + 1) * out_len];
        let gi = g_in.row_mut(m);
        for (&i, &v) in idx.iter().zip(g) {
            if i >= length {
                return Err(NnError::IndexOutOfRange { index: i, length });
            }
            gi[i] += v;
        }
    }
    Ok(g_in)
}

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Derivative at exactly zero is taken as zero.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if input.shape() != grad_out.shape() {
        return Err(NnError::Shape(format!(
            "relu input {:?} vs gradient {:?}",
            input.shape(),
            grad_out.shape()
        )));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

#[derive(Debug, Clone)]
pub struct FcGrads<T> {
    /// Gradient with respect to the input, in the input's original shape.
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

fn check_fc_shapes<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>) -> Result<(usize, usize), NnError> {
    if weights.rank() != 2 || weights.shape()[1] != input.len() {
        return Err(NnError::Shape(format!(
            "fully connected weights {:?} cannot consume input {:?} ({} values)",
            weights.shape(),
            input.shape(),
            input.len()
        )));
    }
    Ok((weights.shape()[0], weights.shape()[1]))
}

/// `out = W x + b`, flattening `x` in row-major order.
pub fn fully_connected_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let (out_dim, _) = check_fc_shapes(input, weights)?;
    if bias.shape() != [out_dim] {
        return Err(NnError::Shape(format!(
            "fully connected bias {:?} does not match weights {:?}",
            bias.shape(),
            weights.shape()
        )));
    }
    let x = input.data();
    let data = (0..out_dim).map(|o| bias.data()[o] + dot(weights.row(o), x)).collect();
    Ok(Tensor::from_vec(data))
}

pub fn fully_connected_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<FcGrads<T>, NnError> {
    let (out_dim, in_dim) = check_fc_shapes(input, weights)?;
    if grad_out.len() != out_dim {
        return Err(NnError::Shape(format!(
            "fully connected gradient {:?} does not match {out_dim} outputs",
            grad_out.shape()
        )));
    }
    let x = input.data();
    let g = grad_out.data();
    let mut g_w = Tensor::zeros(&[out_dim, in_dim]);
    let mut g_x = vec![T::zero(); in_dim];
    for o in 0..out_dim {
        axpy(g_w.row_mut(o), g[o], x);
        axpy(&mut g_x, g[o], weights.row(o));
    }
    Ok(FcGrads {
        input: Tensor::new(input.shape().to_vec(), g_x)?,
        weights: g_w,
        bias: Tensor::from_vec(g.to_vec()),
    })
}

fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(sigmoid_scalar)
}

/// Takes the sigmoid *output* rather than its input.
pub fn sigmoid_backward<T: Scalar>(output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if output.shape() != grad_out.shape() {
        return Err(NnError::Shape(format!(
            "sigmoid output {:?} vs gradient {:?}",
            output.shape(),
            grad_out.shape()
        )));
    }
    let data = output
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&s, &g)| g * s * (T::one() - s))
        .collect();
    Tensor::new(output.shape().to_vec(), data)
}

/// Inverted dropout. Returns the output and, in training mode, the per-element
/// multiplier (0 or `1 / (1 - rate)`) needed by the backward pass.
pub fn dropout<T: Scalar, R: Rng + ?Sized>(
    input: &Tensor<T>,
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<(Tensor<T>, Option<Vec<T>>), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::InvalidParameter(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let keep = T::from_f64_lossy(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..input.len())
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect();
    let data = input.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
    Ok((Tensor::new(input.shape().to_vec(), data)?, Some(mask)))
}

pub fn dropout_backward<T: Scalar>(mask: Option<&[T]>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    match mask {
        None => Ok(grad_out.clone()),
        Some(mask) => {
            if mask.len() != grad_out.len() {
                return Err(NnError::Shape(format!(
                    "dropout mask of {} entries vs gradient {:?}",
                    mask.len(),
                    grad_out.shape()
                )));
            }
            let data = grad_out.data().iter().zip(mask).map(|(&g, &m)| g * m).collect();
            Tensor::new(grad_out.shape().to_vec(), data)
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn t2(rows: usize, data: &[f64]) -> Tensor<f64> {
        Tensor::new(vec![rows, data.len() / rows], data.to_vec()).unwrap()
    }

    #[test]
    fn conv_central_difference_on_ramp() {
        let input = t2(1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let w = Tensor::new(vec![1, 1, 3], vec![1.0, 0.0, -1.0]).unwrap();
        let out = temporal_conv_forward(&input, &w, &Tensor::zeros(&[1])).unwrap();
        assert_eq!(out.shape(), &[1, 3]);
        assert_eq!(out.data(), &[-2.0, -2.0, -2.0]);
    }

    #[test]
    fn conv_zero_weights_yield_bias() {
        let input = t2(2, &[0.3, -1.0, 2.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let w = Tensor::zeros(&[3, 2, 2]);
        let b = Tensor::from_vec(vec![0.5, -1.5, 2.0]);
        let out = temporal_conv_forward(&input, &w, &b).unwrap();
        assert_eq!(out.shape(), &[3, 3]);
        for m in 0..3 {
            assert!(out.row(m).iter().all(|&v| v == b.data()[m]));
        }
    }

    #[test]
    fn conv_rejects_bad_shapes() {
        let input = t2(1, &[1.0, 2.0]);
        let w = Tensor::zeros(&[1, 1, 3]);
        let err = temporal_conv_forward(&input, &w, &Tensor::zeros(&[1])).unwrap_err();
        assert!(err.to_string().contains("[1, 2]") && err.to_string().contains("[1, 1, 3]"));
        let w = Tensor::zeros(&[1, 2, 1]);
        let err = temporal_conv_forward(&input, &w, &Tensor::zeros(&[1])).unwrap_err();
        assert!(err.to_string().contains("[1, 2, 1]"));
    }

    #[test]
    fn conv_backward_zero_and_single_position() {
        let input = t2(2, &[1.0, 2.0, 3.0, -4.0, 5.0, 0.5]);
        let w = Tensor::new(vec![2, 2, 3], (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
        let g = conv_backward_all_zero(&input, &w);
        assert!(g
            .input
            .data()
            .iter()
            .chain(g.weights.data())
            .chain(g.bias.data())
            .all(|&v| v == 0.0));

        let grad_out = t2(2, &[2.0, -3.0]);
        let g = temporal_conv_backward(&input, &w, &grad_out).unwrap();
        for m in 0..2 {
            for c in 0..2 {
                for k in 0..3 {
                    let expected = input.row(c)[k] * grad_out.data()[m];
                    assert_eq!(g.weights.data()[(m * 2 + c) * 3 + k], expected);
                }
            }
        }
        assert_eq!(g.bias.data(), &[2.0, -3.0]);
    }

    fn conv_backward_all_zero(input: &Tensor<f64>, w: &Tensor<f64>) -> ConvGrads<f64> {
        temporal_conv_backward(input, w, &Tensor::zeros(&[2, 1])).unwrap()
    }

    #[test]
    fn maxpool_basic_and_ties() {
        let input = t2(1, &[1.0, 3.0, 2.0, 5.0, 4.0, 0.0]);
        let p = maxpool_forward(&input, 2, 2).unwrap();
        assert_eq!(p.output.data(), &[3.0, 5.0, 4.0]);
        assert_eq!(p.argmax, vec![1, 3, 4]);

        let flat = t2(1, &[7.0; 9]);
        let p = maxpool_forward(&flat, 3, 2).unwrap();
        assert!(p.output.data().iter().all(|&v| v == 7.0));
        assert_eq!(p.argmax, vec![0, 2, 4, 6]);

        assert!(maxpool_forward(&t2(1, &[1.0]), 2, 1).is_err());
    }

    #[test]
    fn maxpool_backward_routes_and_accumulates() {
        // Non-overlapping: at most one gradient per input position.
        let input = t2(1, &[1.0, 3.0, 2.0, 5.0, 4.0, 0.0]);
        let p = maxpool_forward(&input, 2, 2).unwrap();
        let g = maxpool_backward(&p.argmax, &t2(1, &[1.0, 1.0, 1.0]), input.shape()).unwrap();
        assert_eq!(g.data(), &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);

        // Overlapping windows sharing a global max accumulate both gradients.
        let mut data = vec![0.0; 60];
        data[30] = 10.0;
        let input = t2(1, &data);
        let p = maxpool_forward(&input, 40, 20).unwrap();
        assert_eq!(p.argmax, vec![30, 30]);
        let g = maxpool_backward(&p.argmax, &t2(1, &[0.25, 0.5]), input.shape()).unwrap();
        assert_eq!(g.data()[30], 0.75);
        assert_eq!(g.data().iter().sum::<f64>(), 0.75);

        let err = maxpool_backward(&[7], &t2(1, &[1.0]), &[1, 4]).unwrap_err();
        assert!(matches!(err, NnError::IndexOutOfRange { index: 7, length: 4 }));
    }

    #[test]
    fn relu_values_and_idempotence() {
        let x = Tensor::from_vec(vec![-1.0, 0.0, 2.0]);
        let y = relu(&x);
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
        assert_eq!(relu(&y), y);
        let g = relu_backward(&x, &Tensor::from_vec(vec![5.0, 5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn sigmoid_is_stable() {
        let s = sigmoid(&Tensor::from_vec(vec![0.0f64, 800.0, -800.0, 3.0]));
        assert_eq!(s.data()[0], 0.5);
        assert_eq!(s.data()[1], 1.0);
        assert!(s.data()[2] >= 0.0 && s.data()[2].is_finite());
        assert!((s.data()[3] - 1.0 / (1.0 + (-3.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn dropout_identities_and_rate_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::from_vec(vec![1.0f32, -2.0, 3.0]);
        assert_eq!(dropout(&x, 0.0, &mut rng, true).unwrap().0, x);
        assert_eq!(dropout(&x, 0.9, &mut rng, false).unwrap().0, x);
        assert!(dropout(&x, 1.0, &mut rng, true).is_err());
        assert!(dropout(&x, -0.1, &mut rng, true).is_err());
        let (y, mask) = dropout(&x, 0.5, &mut rng, true).unwrap();
        let mask = mask.unwrap();
        for ((&a, &b), &m) in x.data().iter().zip(y.data()).zip(&mask) {
            assert!(m == 0.0 || m == 2.0);
            assert_eq!(b, a * m);
        }
    }

    #[test]
    fn fully_connected_matches_hand_product() {
        let x = Tensor::new(vec![1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let w = Tensor::new(vec![2, 3], vec![1.0, 0.0, -1.0, 0.5, 0.5, 0.5]).unwrap();
        let b = Tensor::from_vec(vec![0.1, -0.1]);
        let y = fully_connected_forward(&x, &w, &b).unwrap();
        assert_eq!(y.data(), &[-2.0 + 0.1, 3.0 - 0.1]);
        let g = fully_connected_backward(&x, &w, &Tensor::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(g.input.shape(), &[1, 3]);
        assert_eq!(g.input.data(), &[2.0, 1.0, 0.0]);
        assert_eq!(g.weights.data(), &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
    }
}
