//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here calls into the code path it is used to check: gradients are
//! central finite differences, metrics and labels are recounted by brute
//! force.
#![allow(dead_code)]

pub mod corpus;
pub mod oracles;

use icnn_core::nn::{self, Architecture, ForwardCache, LayerCache, Mode, ModelParams};
use icnn_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;

/// Central-difference gradient of `f` at `x`.
pub fn finite_difference(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `|a - n| / (|a| + |n|)` in the Euclidean norm.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    if na + nn == 0.0 {
        0.0
    } else {
        diff / (na + nn)
    }
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn random_tensor(rng: &mut impl Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    Tensor::new(shape.to_vec(), random_vec(rng, shape.iter().product(), scale)).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn with_data(t: &Tensor<f64>, data: &[f64]) -> Tensor<f64> {
    Tensor::new(t.shape().to_vec(), data.to_vec()).unwrap()
}

/// Worst relative error across input / weight / bias gradients of a random
/// temporal convolution, using the projection loss `sum(r * conv(x))`.
pub fn conv_gradient_error(seed: u64, channels: usize, length: usize, maps: usize, filter: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(&mut rng, &[channels, length], 1.0);
    let w = random_tensor(&mut rng, &[maps, channels, filter], 1.0);
    let b = random_tensor(&mut rng, &[maps], 1.0);
    let r = random_vec(&mut rng, maps * (length - filter + 1), 1.0);
    let r_t = Tensor::new(vec![maps, length - filter + 1], r.clone()).unwrap();
    let g = nn::temporal_conv_backward(&x, &w, &r_t).unwrap();

    let loss =
        |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| dot(nn::temporal_conv_forward(x, w, b).unwrap().data(), &r);
    let gx = finite_difference(x.data(), FD_STEP, |v| loss(&with_data(&x, v), &w, &b));
    let gw = finite_difference(w.data(), FD_STEP, |v| loss(&x, &with_data(&w, v), &b));
    let gb = finite_difference(b.data(), FD_STEP, |v| loss(&x, &w, &with_data(&b, v)));
    relative_error(g.input.data(), &gx)
        .max(relative_error(g.weights.data(), &gw))
        .max(relative_error(g.bias.data(), &gb))
}

/// Max-pool gradient check on a random input whose windows all have a
/// strict maximum (margin > 1e-3). Returns `None` if the draw had a near-tie.
pub fn maxpool_gradient_error(seed: u64, maps: usize, length: usize, size: usize, stride: usize) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(&mut rng, &[maps, length], 1.0);
    let pooled = nn::maxpool_forward(&x, size, stride).unwrap();
    let out_len = pooled.output.shape()[1];
    for m in 0..maps {
        for t in 0..out_len {
            let mut w: Vec<f64> = x.row(m)[t * stride..t * stride + size].to_vec();
            w.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if w[0] - w[1] < 1e-3 {
                return None;
            }
        }
    }
    let r = random_vec(&mut rng, maps * out_len, 1.0);
    let r_t = Tensor::new(vec![maps, out_len], r.clone()).unwrap();
    let g = nn::maxpool_backward(&pooled.argmax, &r_t, x.shape()).unwrap();
    let numeric = finite_difference(x.data(), FD_STEP, |v| {
        dot(
            nn::maxpool_forward(&with_data(&x, v), size, stride)
                .unwrap()
                .output
                .data(),
            &r,
        )
    });
    Some(relative_error(g.data(), &numeric))
}

/// ReLU gradient check at points with |x| > 1e-3.
pub fn relu_gradient_error(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = rng.gen_range(1e-3..2.0);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    let x = Tensor::from_vec(data);
    let r = random_vec(&mut rng, n, 1.0);
    let g = nn::relu_backward(&x, &Tensor::from_vec(r.clone())).unwrap();
    let numeric = finite_difference(x.data(), FD_STEP, |v| dot(nn::relu(&with_data(&x, v)).data(), &r));
    relative_error(g.data(), &numeric)
}

pub fn fc_gradient_error(seed: u64, input_shape: &[usize], out: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(&mut rng, input_shape, 1.0);
    let w = random_tensor(&mut rng, &[out, x.len()], 1.0);
    let b = random_tensor(&mut rng, &[out], 1.0);
    let r = random_vec(&mut rng, out, 1.0);
    let g = nn::fully_connected_backward(&x, &w, &Tensor::from_vec(r.clone())).unwrap();
    let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
        dot(nn::fully_connected_forward(x, w, b).unwrap().data(), &r)
    };
    let gx = finite_difference(x.data(), FD_STEP, |v| loss(&with_data(&x, v), &w, &b));
    let gw = finite_difference(w.data(), FD_STEP, |v| loss(&x, &with_data(&w, v), &b));
    let gb = finite_difference(b.data(), FD_STEP, |v| loss(&x, &w, &with_data(&b, v)));
    relative_error(g.input.data(), &gx)
        .max(relative_error(g.weights.data(), &gw))
        .max(relative_error(g.bias.data(), &gb))
}

pub fn sigmoid_gradient_error(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(&mut rng, &[n], 4.0);
    let r = random_vec(&mut rng, n, 1.0);
    let y = nn::sigmoid(&x);
    let g = nn::sigmoid_backward(&y, &Tensor::from_vec(r.clone())).unwrap();
    let numeric = finite_difference(x.data(), FD_STEP, |v| dot(nn::sigmoid(&with_data(&x, v)).data(), &r));
    relative_error(g.data(), &numeric)
}

pub fn dropout_gradient_error(seed: u64, n: usize, rate: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(&mut rng, &[n], 1.0);
    let r = random_vec(&mut rng, n, 1.0);
    let mask_seed = rng.gen::<u64>();
    let run = |x: &Tensor<f64>| nn::dropout(x, rate, &mut ChaCha8Rng::seed_from_u64(mask_seed), true).unwrap();
    let (_, mask) = run(&x);
    let g = nn::dropout_backward(mask.as_deref(), &Tensor::from_vec(r.clone())).unwrap();
    let numeric = finite_difference(x.data(), FD_STEP, |v| dot(run(&with_data(&x, v)).0.data(), &r));
    relative_error(g.data(), &numeric)
}

pub fn bce_gradient_error(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = Tensor::from_vec((0..n).map(|_| rng.gen_range(0.05..0.95)).collect());
    let y = Tensor::from_vec((0..n).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect());
    let (_, g) = nn::bce_loss(&p, &y).unwrap();
    let numeric = finite_difference(p.data(), FD_STEP, |v| nn::bce_loss(&with_data(&p, v), &y).unwrap().0);
    relative_error(g.data(), &numeric)
}

/// Piecewise-linear "pattern" of a forward pass: the sign of every ReLU input
/// and every pooling argmax. Two inputs with the same pattern lie in the same
/// smooth region of the network.
pub fn activation_pattern(cache: &ForwardCache<f64>) -> Vec<usize> {
    let mut pattern = Vec::new();
    for c in &cache.layers {
        match c {
            LayerCache::Relu { input } => pattern.extend(input.data().iter().map(|&v| usize::from(v > 0.0))),
            LayerCache::Pool { argmax, .. } => pattern.extend_from_slice(argmax),
            _ => {}
        }
    }
    pattern
}

pub struct NetworkCheck {
    pub relative_error: f64,
    pub checked: usize,
    /// Probes whose +/- step crossed a ReLU kink or changed a pooling winner.
    pub excluded: usize,
}

/// Composed-network check on the reduced architecture (input 200, filters
/// 11/5/3, pools 4/2/2, maps 4/6/6, FC 16 -> 11) in training mode with a
/// fixed dropout mask. Covers every parameter and the input gradient. A probe
/// is excluded when either perturbed evaluation changes the activation
/// pattern, i.e. when the step straddles a ReLU kink or a max-pool tie.
pub fn network_gradient_check(seed: u64) -> NetworkCheck {
    let arch = Architecture::reduced(200, 11, 0.5);
    let params: ModelParams<f64> = arch.init_params(seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x = random_tensor(&mut rng, &[1, 200], 1.0);
    let y = Tensor::from_vec((0..11).map(|_| f64::from(u8::from(rng.gen_bool(0.4)))).collect());
    let mask_seed = rng.gen::<u64>();

    let run = |p: &ModelParams<f64>, x: &Tensor<f64>| {
        let (pred, cache) = nn::forward(&arch, p, x, Mode::Train, &mut ChaCha8Rng::seed_from_u64(mask_seed)).unwrap();
        (
            nn::bce_loss(&pred, &y).unwrap().0,
            activation_pattern(&cache),
            pred,
            cache,
        )
    };

    let (_, base_pattern, pred, cache) = run(&params, &x);
    let (_, g_pred) = nn::bce_loss(&pred, &y).unwrap();
    let (grads, g_input) = nn::backward(&arch, &params, &cache, &g_pred).unwrap();

    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut excluded = 0;
    let mut probe = |a: f64, eval: &mut dyn FnMut(f64) -> (f64, Vec<usize>)| {
        let (up, pu) = eval(FD_STEP);
        let (down, pd) = eval(-FD_STEP);
        if pu != base_pattern || pd != base_pattern {
            excluded += 1;
        } else {
            analytic.push(a);
            numeric.push((up - down) / (2.0 * FD_STEP));
        }
    };

    for (ti, t) in params.tensors().enumerate() {
        let g = grads.tensors().nth(ti).unwrap();
        for i in 0..t.len() {
            probe(g.data()[i], &mut |h| {
                let mut p = params.clone();
                p.tensors_mut().nth(ti).unwrap().data_mut()[i] += h;
                let (l, pat, _, _) = run(&p, &x);
                (l, pat)
            });
        }
    }
    for i in 0..x.len() {
        probe(g_input.data()[i], &mut |h| {
            let mut xp = x.clone();
            xp.data_mut()[i] += h;
            let (l, pat, _, _) = run(&params, &xp);
            (l, pat)
        });
    }
    NetworkCheck {
        relative_error: relative_error(&analytic, &numeric),
        checked: analytic.len(),
        excluded,
    }
}
