use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{LayerParams, ModelParams};
use super::NnError;
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    TemporalConv {
        feature_maps: usize,
        filter_size: usize,
    },
    /// Overlapping windows (`size > stride`) are allowed.
    MaxPool1d {
        size: usize,
        stride: usize,
    },
    Relu,
    /// Flattens its input in row-major order.
    FullyConnected {
        output_size: usize,
    },
    Dropout {
        rate: f64,
    },
    Sigmoid,
}

impl LayerSpec {
    pub fn is_trainable(&self) -> bool {
        matches!(self, Self::TemporalConv { .. } | Self::FullyConnected { .. })
    }

    fn validate(&self, index: usize) -> Result<(), NnError> {
        let bad = |what: String| Err(NnError::InvalidParameter(format!("layer {index}: {what}")));
        match *self {
            Self::TemporalConv {
                feature_maps,
                filter_size,
            } if feature_maps == 0 || filter_size == 0 => bad(format!(
                "conv needs positive maps and filter size, got {feature_maps}/{filter_size}"
            )),
            Self::MaxPool1d { size, stride } if size == 0 || stride == 0 => {
                bad(format!("pool needs positive size and stride, got {size}/{stride}"))
            }
            Self::FullyConnected { output_size: 0 } => bad("fully connected output size is 0".into()),
            Self::Dropout { rate } if !(0.0..1.0).contains(&rate) => bad(format!("dropout rate {rate} outside [0, 1)")),
            _ => Ok(()),
        }
    }
}

/// Output shape of every layer, applying `L - F + 1` for convolutions and
/// `floor((L - P) / S) + 1` for pooling. Fully connected layers flatten.
pub fn infer_shapes(
    layers: &[LayerSpec],
    input_length: usize,
    input_channels: usize,
) -> Result<Vec<Vec<usize>>, NnError> {
    if input_length == 0 || input_channels == 0 {
        return Err(NnError::InvalidParameter(format!(
            "input shape [{input_channels}, {input_length}] must be positive"
        )));
    }
    let mut shape = vec![input_channels, input_length];
    let mut shapes = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        layer.validate(i)?;
        shape = match *layer {
            LayerSpec::TemporalConv {
                feature_maps,
                filter_size,
            } => {
                let length = temporal_length(&shape, i)?;
                if length < filter_size {
                    return Err(NnError::InputTooShort {
                        layer: i,
                        length,
                        required: filter_size,
                    });
                }
                vec![feature_maps, length - filter_size + 1]
            }
            LayerSpec::MaxPool1d { size, stride } => {
                let length = temporal_length(&shape, i)?;
                if length < size {
                    return Err(NnError::InputTooShort {
                        layer: i,
                        length,
                        required: size,
                    });
                }
                vec![shape[0], (length - size) / stride + 1]
            }
            LayerSpec::FullyConnected { output_size } => vec![output_size],
            LayerSpec::Relu | LayerSpec::Dropout { .. } | LayerSpec::Sigmoid => shape,
        };
        shapes.push(shape.clone());
    }
    Ok(shapes)
}

fn temporal_length(shape: &[usize], layer: usize) -> Result<usize, NnError> {
    match shape {
        [_, length] => Ok(*length),
        _ => Err(NnError::Shape(format!(
            "layer {layer} needs a [maps, length] input but receives {shape:?} (after a fully connected layer)"
        ))),
    }
}

/// Input geometry plus the ordered layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub input_channels: usize,
    pub input_length: usize,
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    /// Three temporal conv blocks (conv, max pool, ReLU) followed by
    /// FC-400 + ReLU + dropout and FC-`num_classes` + sigmoid, on one-second
    /// mono clips at 44.1 kHz.
    pub fn full(num_classes: usize, dropout_rate: f64) -> Self {
        use LayerSpec::*;
        Self {
            input_channels: 1,
            input_length: crate::CLIP_SAMPLES,
            layers: vec![
                TemporalConv {
                    feature_maps: 256,
                    filter_size: 3101,
                },
                MaxPool1d { size: 40, stride: 20 },
                Relu,
                TemporalConv {
                    feature_maps: 384,
                    filter_size: 300,
                },
                MaxPool1d { size: 30, stride: 20 },
                Relu,
                TemporalConv {
                    feature_maps: 384,
                    filter_size: 20,
                },
                MaxPool1d { size: 8, stride: 4 },
                Relu,
                FullyConnected { output_size: 400 },
                Relu,
                Dropout { rate: dropout_rate },
                FullyConnected {
                    output_size: num_classes,
                },
                Sigmoid,
            ],
        }
    }

    /// Same topology with small filters, pools and widths, for tests and
    /// CPU-scale experiments.
    pub fn reduced(input_length: usize, num_classes: usize, dropout_rate: f64) -> Self {
        use LayerSpec::*;
        Self {
            input_channels: 1,
            input_length,
            layers: vec![
                TemporalConv {
                    feature_maps: 4,
                    filter_size: 11,
                },
                MaxPool1d { size: 4, stride: 2 },
                Relu,
                TemporalConv {
                    feature_maps: 6,
                    filter_size: 5,
                },
                MaxPool1d { size: 2, stride: 2 },
                Relu,
                TemporalConv {
                    feature_maps: 6,
                    filter_size: 3,
                },
                MaxPool1d { size: 2, stride: 2 },
                Relu,
                FullyConnected { output_size: 16 },
                Relu,
                Dropout { rate: dropout_rate },
                FullyConnected {
                    output_size: num_classes,
                },
                Sigmoid,
            ],
        }
    }

    pub fn infer_shapes(&self) -> Result<Vec<Vec<usize>>, NnError> {
        infer_shapes(&self.layers, self.input_length, self.input_channels)
    }

    pub fn input_shape(&self) -> [usize; 2] {
        [self.input_channels, self.input_length]
    }

    pub fn output_size(&self) -> Result<usize, NnError> {
        Ok(self
            .infer_shapes()?
            .last()
            .map(|s| s.iter().product())
            .unwrap_or(self.input_channels * self.input_length))
    }

    /// `(weights, bias)` shapes for every trainable layer, in order.
    pub fn param_shapes(&self) -> Result<Vec<(Vec<usize>, Vec<usize>)>, NnError> {
        let shapes = self.infer_shapes()?;
        let mut prev = self.input_shape().to_vec();
        let mut out = Vec::new();
        for (layer, shape) in self.layers.iter().zip(&shapes) {
            match *layer {
                LayerSpec::TemporalConv {
                    feature_maps,
                    filter_size,
                } => {
                    out.push((vec![feature_maps, prev[0], filter_size], vec![feature_maps]));
                }
                LayerSpec::FullyConnected { output_size } => {
                    out.push((vec![output_size, prev.iter().product()], vec![output_size]));
                }
                _ => {}
            }
            prev.clone_from(shape);
        }
        Ok(out)
    }

    /// Weights uniform in `[-sqrt(6 / fan_in), sqrt(6 / fan_in)]`, biases zero.
    pub fn init_params<T: Scalar>(&self, seed: u64) -> Result<ModelParams<T>, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = self
            .param_shapes()?
            .into_iter()
            .map(|(w_shape, b_shape)| {
                let fan_in: usize = w_shape[1..].iter().product();
                let limit = (6.0 / fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit);
                let len = w_shape.iter().product();
                let data = (0..len).map(|_| T::from_f64_lossy(dist.sample(&mut rng))).collect();
                Ok(LayerParams {
                    weights: Tensor::new(w_shape, data)?,
                    bias: Tensor::zeros(&b_shape),
                })
            })
            .collect::<Result<_, NnError>>()?;
        Ok(ModelParams { layers })
    }

    /// Checks that `params` has exactly the tensor shapes this architecture needs.
    pub fn check_params<T: Scalar>(&self, params: &ModelParams<T>) -> Result<(), NnError> {
        let expected = self.param_shapes()?;
        if expected.len() != params.layers.len() {
            return Err(NnError::Shape(format!(
                "architecture has {} trainable layers, parameters have {}",
                expected.len(),
                params.layers.len()
            )));
        }
        for (i, ((w, b), p)) in expected.iter().zip(&params.layers).enumerate() {
            if p.weights.shape() != w.as_slice() || p.bias.shape() != b.as_slice() {
                return Err(NnError::Shape(format!(
                    "trainable layer {i}: expected weights {w:?} / bias {b:?}, got {:?} / {:?}",
                    p.weights.shape(),
                    p.bias.shape()
                )));
            }
        }
        Ok(())
    }
}
