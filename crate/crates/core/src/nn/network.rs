use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::arch::{Architecture, LayerSpec};
use super::layers::*;
use super::loss::bce_loss;
use super::NnError;
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Weights and biases of every trainable layer (convolutions and fully
/// connected layers), in network order. Also used to hold gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub layers: Vec<LayerParams<T>>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: Tensor::zeros(l.weights.shape()),
                    bias: Tensor::zeros(l.bias.shape()),
                })
                .collect(),
        }
    }

    /// Tensors in manifest order: weights then bias for each layer.
    pub fn tensors(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.layers.iter().flat_map(|l| [&l.weights, &l.bias])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub fn num_values(&self) -> usize {
        self.tensors().map(Tensor::len).sum()
    }

    pub fn add_scaled(&mut self, other: &Self, alpha: T) {
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            a.add_scaled(b, alpha);
        }
    }

    pub fn scale(&mut self, alpha: T) {
        for t in self.tensors_mut() {
            t.scale(alpha);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().all(Tensor::all_finite)
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights.cast(),
                    bias: l.bias.cast(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            batch_size: 16,
            epochs: 10,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::InvalidParameter(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(NnError::InvalidParameter(
                "batch size and epochs must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// What each layer keeps from the forward pass for its backward pass.
#[derive(Debug, Clone)]
pub enum LayerCache<T> {
    Conv {
        input: Tensor<T>,
    },
    Pool {
        argmax: Vec<usize>,
        input_shape: Vec<usize>,
    },
    Relu {
        input: Tensor<T>,
    },
    FullyConnected {
        input: Tensor<T>,
    },
    Dropout {
        mask: Option<Vec<T>>,
    },
    Sigmoid {
        output: Tensor<T>,
    },
}

#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub layers: Vec<LayerCache<T>>,
}

/// Runs one example (`[channels, length]`) through the network.
pub fn forward<T: Scalar, R: Rng + ?Sized>(
    arch: &Architecture,
    params: &ModelParams<T>,
    input: &Tensor<T>,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor<T>, ForwardCache<T>), NnError> {
    if input.shape() != arch.input_shape() {
        return Err(NnError::Shape(format!(
            "network input {:?} does not match architecture input {:?}",
            input.shape(),
            arch.input_shape()
        )));
    }
    let mut x = input.clone();
    let mut caches = Vec::with_capacity(arch.layers.len());
    let mut trainable = params.layers.iter();
    let mut next_params = |i: usize| {
        trainable
            .next()
            .ok_or_else(|| NnError::Shape(format!("no parameters for trainable layer {i}")))
    };
    for (i, layer) in arch.layers.iter().enumerate() {
        let (y, cache) = match *layer {
            LayerSpec::TemporalConv { .. } => {
                let p = next_params(i)?;
                let y = temporal_conv_forward(&x, &p.weights, &p.bias)?;
                (y, LayerCache::Conv { input: x })
            }
            LayerSpec::MaxPool1d { size, stride } => {
                let PoolOutput { output, argmax } = maxpool_forward(&x, size, stride)?;
                let input_shape = x.shape().to_vec();
                (output, LayerCache::Pool { argmax, input_shape })
            }
            LayerSpec::Relu => (relu(&x), LayerCache::Relu { input: x }),
            LayerSpec::FullyConnected { .. } => {
                let p = next_params(i)?;
                let y = fully_connected_forward(&x, &p.weights, &p.bias)?;
                (y, LayerCache::FullyConnected { input: x })
            }
            LayerSpec::Dropout { rate } => {
                let (y, mask) = dropout(&x, rate, rng, mode == Mode::Train)?;
                (y, LayerCache::Dropout { mask })
            }
            LayerSpec::Sigmoid => {
                let y = sigmoid(&x);
                (y.clone(), LayerCache::Sigmoid { output: y })
            }
        };
        caches.push(cache);
        x = y;
    }
    Ok((x, ForwardCache { layers: caches }))
}

/// Backpropagates `grad_output` (gradient of the loss with respect to the
/// network output). Returns parameter gradients and the input gradient.
pub fn backward<T: Scalar>(
    arch: &Architecture,
    params: &ModelParams<T>,
    cache: &ForwardCache<T>,
    grad_output: &Tensor<T>,
) -> Result<(ModelParams<T>, Tensor<T>), NnError> {
    if cache.layers.len() != arch.layers.len() {
        return Err(NnError::Shape(format!(
            "cache has {} layers, architecture {}",
            cache.layers.len(),
            arch.layers.len()
        )));
    }
    let mut grads: Vec<Option<LayerParams<T>>> = vec![None; params.layers.len()];
    let mut param_index = params.layers.len();
    let mut g = grad_output.clone();
    for (layer, layer_cache) in arch.layers.iter().zip(&cache.layers).rev() {
        g = match (layer, layer_cache) {
            (LayerSpec::TemporalConv { .. }, LayerCache::Conv { input }) => {
                param_index -= 1;
                let p = &params.layers[param_index];
                let cg = temporal_conv_backward(input, &p.weights, &g)?;
                grads[param_index] = Some(LayerParams {
                    weights: cg.weights,
                    bias: cg.bias,
                });
                cg.input
            }
            (LayerSpec::MaxPool1d { .. }, LayerCache::Pool { argmax, input_shape }) => {
                maxpool_backward(argmax, &g, input_shape)?
            }
            (LayerSpec::Relu, LayerCache::Relu { input }) => relu_backward(input, &g)?,
            (LayerSpec::FullyConnected { .. }, LayerCache::FullyConnected { input }) => {
                param_index -= 1;
                let p = &params.layers[param_index];
                let fg = fully_connected_backward(input, &p.weights, &g)?;
                grads[param_index] = Some(LayerParams {
                    weights: fg.weights,
                    bias: fg.bias,
                });
                fg.input
            }
            (LayerSpec::Dropout { .. }, LayerCache::Dropout { mask }) => dropout_backward(mask.as_deref(), &g)?,
            (LayerSpec::Sigmoid, LayerCache::Sigmoid { output }) => sigmoid_backward(output, &g)?,
            (spec, _) => {
                return Err(NnError::Shape(format!("cache entry does not match layer {spec:?}")));
            }
        };
    }
    let layers = grads
        .into_iter()
        .enumerate()
        .map(|(i, g)| g.ok_or_else(|| NnError::Shape(format!("no gradient for trainable layer {i}"))))
        .collect::<Result<_, _>>()?;
    Ok((ModelParams { layers }, g))
}

/// Forward pass over a batch; example `i` draws its dropout masks from a
/// generator seeded with `seeds[i]`, so the result does not depend on
/// scheduling.
pub fn forward_batch<T: Scalar>(
    arch: &Architecture,
    params: &ModelParams<T>,
    inputs: &[Tensor<T>],
    mode: Mode,
    seeds: &[u64],
) -> Result<Vec<(Tensor<T>, ForwardCache<T>)>, NnError> {
    if seeds.len() != inputs.len() {
        return Err(NnError::InvalidParameter(format!(
            "{} seeds for {} inputs",
            seeds.len(),
            inputs.len()
        )));
    }
    inputs
        .par_iter()
        .zip(seeds)
        .map(|(x, &seed)| forward(arch, params, x, mode, &mut ChaCha8Rng::seed_from_u64(seed)))
        .collect()
}

/// Mean BCE loss, mean parameter gradient and predictions for a batch.
#[derive(Debug, Clone)]
pub struct BatchGradient<T> {
    pub mean_loss: f64,
    pub losses: Vec<f64>,
    pub gradient: ModelParams<T>,
    pub predictions: Vec<Tensor<T>>,
}

/// Per-example gradients are computed in parallel and summed strictly in
/// index order, so the result is identical for any thread count.
pub fn batch_gradient<T: Scalar>(
    arch: &Architecture,
    params: &ModelParams<T>,
    inputs: &[Tensor<T>],
    targets: &[Tensor<T>],
    mode: Mode,
    seeds: &[u64],
) -> Result<BatchGradient<T>, NnError> {
    if inputs.is_empty() || inputs.len() != targets.len() || inputs.len() != seeds.len() {
        return Err(NnError::InvalidParameter(format!(
            "batch of {} inputs, {} targets, {} seeds",
            inputs.len(),
            targets.len(),
            seeds.len()
        )));
    }
    let per_example = |i: usize| -> Result<(f64, ModelParams<T>, Tensor<T>), NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds[i]);
        let (pred, cache) = forward(arch, params, &inputs[i], mode, &mut rng)?;
        let (loss, g_pred) = bce_loss(&pred, &targets[i])?;
        let (grads, _) = backward(arch, params, &cache, &g_pred)?;
        Ok((loss, grads, pred))
    };

    let group = rayon::current_num_threads().max(1);
    let mut total = params.zeros_like();
    let mut losses = Vec::with_capacity(inputs.len());
    let mut predictions = Vec::with_capacity(inputs.len());
    for start in (0..inputs.len()).step_by(group) {
        let end = (start + group).min(inputs.len());
        let results: Vec<_> = (start..end).into_par_iter().map(per_example).collect();
        for r in results {
            let (loss, grads, pred) = r?;
            total.add_scaled(&grads, T::one());
            losses.push(loss);
            predictions.push(pred);
        }
    }
    total.scale(T::one() / T::from_f64_lossy(inputs.len() as f64));
    Ok(BatchGradient {
        mean_loss: losses.iter().sum::<f64>() / losses.len() as f64,
        losses,
        gradient: total,
        predictions,
    })
}

/// Plain SGD: `w <- w - lr * g`. No momentum, no weight decay.
pub fn sgd_step<T: Scalar>(params: &mut ModelParams<T>, gradient: &ModelParams<T>, learning_rate: T) {
    params.add_scaled(gradient, -learning_rate);
}
