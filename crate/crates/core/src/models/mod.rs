//! Differentiable models and the losses they are trained with.

mod grad;
mod loss;
mod objective;

pub use grad::{grad_wrt_input, loss_and_gradients, param_gradient, Gradients};
pub use loss::{multiclass_margin_loss, Label, LabeledExample, Loss, LossKind};
pub use objective::{InputObjective, LinearObjective, ModelObjective, QuadraticBowl};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::tensor::{matvec_into, norm2};
use crate::math::{RngStream, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }
}

/// One affine map `W h + b`; `weight` is `[out, in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }
}

/// A linear classifier or a multilayer perceptron.
///
/// Linear models have a single bias-free layer, so the score is exactly
/// `theta^T x` (or `Theta x` with one row per class). MLPs apply the
/// activation after every layer except the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub layers: Vec<Layer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
}

impl Model {
    /// Binary linear classifier `theta^T x`.
    pub fn linear(theta: Vec<f64>) -> Self {
        let d = theta.len();
        Self {
            kind: ModelKind::Linear,
            layers: vec![Layer {
                weight: Tensor::matrix(1, d, theta).expect("row vector"),
                bias: None,
            }],
            activation: None,
        }
    }

    /// `K`-class linear classifier from a `[K, d]` matrix whose rows are the class vectors.
    pub fn linear_multiclass(weight: Tensor) -> Result<Self> {
        let model = Self {
            kind: ModelKind::Linear,
            layers: vec![Layer { weight, bias: None }],
            activation: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// MLP with layer widths `dims = [input, hidden.., output]`, weights and
    /// biases uniform in `+-1/sqrt(fan_in)`.
    pub fn mlp(dims: &[usize], activation: Activation, rng: &mut RngStream) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::BadSpec(format!(
                "mlp needs at least two positive widths, got {dims:?}"
            )));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weight: Vec<f64> = (0..fan_in * fan_out)
                    .map(|_| rng.uniform_range(-bound, bound))
                    .collect();
                let bias: Vec<f64> = (0..fan_out)
                    .map(|_| rng.uniform_range(-bound, bound))
                    .collect();
                Layer {
                    weight: Tensor::matrix(fan_out, fan_in, weight).expect("sized"),
                    bias: Some(Tensor::vector(bias)),
                }
            })
            .collect();
        Ok(Self {
            kind: ModelKind::Mlp,
            layers,
            activation: Some(activation),
        })
    }

    /// Linear classifier initialized like an MLP's single layer, without bias.
    pub fn linear_init(d: usize, outputs: usize, rng: &mut RngStream) -> Self {
        let bound = 1.0 / (d as f64).sqrt();
        let w = (0..d * outputs)
            .map(|_| rng.uniform_range(-bound, bound))
            .collect();
        Self {
            kind: ModelKind::Linear,
            layers: vec![Layer {
                weight: Tensor::matrix(outputs, d, w).expect("sized"),
                bias: None,
            }],
            activation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::BadSpec("model has no layers".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weight.shape().len() != 2 {
                return Err(Error::BadSpec(format!("layer {i} weight must be a matrix")));
            }
            if let Some(b) = &layer.bias {
                if b.shape() != [layer.outputs()] {
                    return Err(Error::BadSpec(format!(
                        "layer {i} bias shape {:?}",
                        b.shape()
                    )));
                }
            }
            if i > 0 && self.layers[i - 1].outputs() != layer.inputs() {
                return Err(Error::BadSpec(format!(
                    "layer {i} expects {} inputs but the previous layer emits {}",
                    layer.inputs(),
                    self.layers[i - 1].outputs()
                )));
            }
        }
        match self.kind {
            ModelKind::Linear if self.layers.len() != 1 || self.layers[0].bias.is_some() => Err(
                Error::BadSpec("a linear model is one bias-free layer".into()),
            ),
            ModelKind::Mlp if self.activation.is_none() => {
                Err(Error::BadSpec("an mlp needs an activation".into()))
            }
            _ if !self.parameter_norm().is_finite() => {
                Err(Error::BadSpec("non-finite parameters".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("validated").outputs()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.as_ref().map_or(0, Tensor::len))
            .sum()
    }

    /// Parameters in layer order, each weight (row-major) followed by its bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            if let Some(b) = &l.bias {
                out.extend_from_slice(b.data());
            }
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::ShapeMismatch {
                op: "set_flat_params",
                lhs: vec![self.num_params()],
                rhs: vec![params.len()],
            });
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let n = l.weight.len();
            l.weight
                .data_mut()
                .copy_from_slice(&params[offset..offset + n]);
            offset += n;
            if let Some(b) = &mut l.bias {
                let n = b.len();
                b.data_mut().copy_from_slice(&params[offset..offset + n]);
                offset += n;
            }
        }
        Ok(())
    }

    /// Euclidean norm of all parameters.
    pub fn parameter_norm(&self) -> f64 {
        norm2(&self.flat_params())
    }

    /// `max_k ||theta_k||_2` over class vectors of a linear model.
    pub fn norm_2_inf(&self) -> f64 {
        let w = &self.layers[0].weight;
        let cols = w.shape()[1];
        w.data().chunks(cols).map(norm2).fold(0.0, f64::max)
    }

    /// Scores for input `x`: a `[1]` tensor for binary models, `[K]` otherwise.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.shape() != [self.input_dim()] {
            return Err(Error::ShapeMismatch {
                op: "forward",
                lhs: vec![self.input_dim()],
                rhs: x.shape().to_vec(),
            });
        }
        Ok(Tensor::vector(self.forward_slice(x.data())))
    }

    /// Forward pass on a raw slice; `x.len()` must equal [`Model::input_dim`].
    pub fn forward_slice(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; layer.outputs()];
            matvec_into(
                layer.weight.data(),
                layer.outputs(),
                layer.inputs(),
                &h,
                &mut out,
            );
            if let Some(b) = &layer.bias {
                for (o, &bv) in out.iter_mut().zip(b.data()) {
                    *o += bv;
                }
            }
            if i < last {
                let act = self.activation.unwrap_or(Activation::Relu);
                for o in &mut out {
                    *o = act.apply(*o);
                }
            }
            h = out;
        }
        h
    }

    /// Pre-activations of every hidden unit, for kink-proximity checks.
    pub fn hidden_preactivations(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let mut pre = Vec::new();
        let last = self.layers.len() - 1;
        for layer in self.layers.iter().take(last) {
            let mut out = vec![0.0; layer.outputs()];
            matvec_into(
                layer.weight.data(),
                layer.outputs(),
                layer.inputs(),
                &h,
                &mut out,
            );
            if let Some(b) = &layer.bias {
                for (o, &bv) in out.iter_mut().zip(b.data()) {
                    *o += bv;
                }
            }
            pre.extend_from_slice(&out);
            let act = self.activation.unwrap_or(Activation::Relu);
            h = out.into_iter().map(|v| act.apply(v)).collect();
        }
        pre
    }

    /// SGD update `theta <- theta - lr * (grad + weight_decay * theta)`.
    pub fn sgd_update(&mut self, grad: &[f64], lr: f64, weight_decay: f64) -> Result<()> {
        let mut params = self.flat_params();
        if grad.len() != params.len() {
            return Err(Error::ShapeMismatch {
                op: "sgd_update",
                lhs: vec![params.len()],
                rhs: vec![grad.len()],
            });
        }
        for (p, &g) in params.iter_mut().zip(grad) {
            *p -= lr * (g + weight_decay * *p);
        }
        self.set_flat_params(&params)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let model: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        model.validate()?;
        Ok(model)
    }
}
