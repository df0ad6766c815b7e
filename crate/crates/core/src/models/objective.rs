//! Scalar functions of the input `x` with gradients, the common currency of
//! the expansion verifiers.

use crate::error::{Error, Result};
use crate::math::tensor::dot;
use crate::math::Tensor;

use super::{grad_wrt_input, Activation, Label, Loss, LossKind, Model};

/// `x -> L(x)` with its gradient.
pub trait InputObjective: Sync {
    fn dim(&self) -> usize;

    /// Callers must pass `x.len() == self.dim()`.
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Smallest distance-like margin to a non-differentiable surface at `x`,
    /// or `None` when the objective is smooth everywhere.
    fn kink_margin(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// `x -> loss(model(x), y)` for a fixed model and label.
#[derive(Debug, Clone)]
pub struct ModelObjective {
    pub model: Model,
    pub loss: Loss,
    pub label: Label,
}

impl ModelObjective {
    pub fn new(model: Model, loss: Loss, label: Label) -> Result<Self> {
        model.validate()?;
        if loss.kind == LossKind::ZeroOne {
            return Err(Error::GradientOfZeroOne);
        }
        let probe = Tensor::zeros(&[model.input_dim()]);
        model.loss(&loss, &probe, label)?;
        Ok(Self { model, loss, label })
    }
}

impl InputObjective for ModelObjective {
    fn dim(&self) -> usize {
        self.model.input_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let scores = self.model.forward_slice(x);
        self.loss
            .of_scores(&scores, self.label)
            .expect("validated at construction")
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        grad_wrt_input(
            &self.model,
            &self.loss,
            &Tensor::vector(x.to_vec()),
            self.label,
        )
        .expect("validated at construction")
        .into_data()
    }

    fn kink_margin(&self, x: &[f64]) -> Option<f64> {
        let mut margin: Option<f64> = None;
        let mut consider = |m: f64| margin = Some(margin.map_or(m, |cur: f64| cur.min(m)));
        if self.model.activation == Some(Activation::Relu) && self.model.layers.len() > 1 {
            for p in self.model.hidden_preactivations(x) {
                consider(p.abs());
            }
        }
        let scores = self.model.forward_slice(x);
        let signed = match self.label {
            Label::Binary(y) => Some(y * scores[0]),
            Label::Class(k) if self.loss.kind != LossKind::SoftmaxCe => Some(scores[k]),
            Label::Class(_) => None,
        };
        if let Some(s) = signed {
            match self.loss.kind {
                LossKind::Hinge => consider((1.0 - s).abs()),
                LossKind::DraftHinge => consider(s.abs()),
                _ => {}
            }
        }
        if let Some(b) = self.loss.bound {
            let raw = self.loss.of_scores(&scores, self.label).unwrap_or(0.0);
            consider((raw - b).abs());
        }
        margin
    }
}

/// `x -> ||x||^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticBowl {
    pub dim: usize,
}

impl InputObjective for QuadraticBowl {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

/// `x -> g^T x + c`.
#[derive(Debug, Clone)]
pub struct LinearObjective {
    pub g: Vec<f64>,
    pub c: f64,
}

impl InputObjective for LinearObjective {
    fn dim(&self) -> usize {
        self.g.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.g, x) + self.c
    }

    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.g.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RngStream;

    #[test]
    fn tanh_logistic_is_smooth() {
        let mut rng = RngStream::new(1, 2);
        let m = Model::mlp(&[3, 4, 1], Activation::Tanh, &mut rng).unwrap();
        let obj = ModelObjective::new(m, Loss::logistic(), Label::Binary(1.0)).unwrap();
        assert_eq!(obj.kink_margin(&[0.1, 0.2, 0.3]), None);
    }

    #[test]
    fn relu_and_hinge_report_margins() {
        let m = Model::linear(vec![1.0, 0.0]);
        let obj = ModelObjective::new(m, Loss::hinge(), Label::Binary(1.0)).unwrap();
        assert!((obj.kink_margin(&[1.25, 7.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!(ModelObjective::new(
            Model::linear(vec![1.0]),
            Loss::new(LossKind::ZeroOne),
            Label::Binary(1.0)
        )
        .is_err());
    }

    #[test]
    fn bowl_and_linear() {
        let b = QuadraticBowl { dim: 2 };
        assert_eq!(b.value(&[3.0, 4.0]), 12.5);
        assert_eq!(b.gradient(&[3.0, 4.0]), vec![3.0, 4.0]);
        let l = LinearObjective {
            g: vec![1.0, 2.0],
            c: 0.5,
        };
        assert_eq!(l.value(&[1.0, 1.0]), 3.5);
    }
}
