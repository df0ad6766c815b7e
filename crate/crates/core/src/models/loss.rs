//! Margin losses, softmax cross-entropy, and the 0-1 evaluation loss.

use serde::{Deserialize, Serialize};

use crate::autodiff::{argmax_lowest, logsumexp};
use crate::error::{Error, Result};
use crate::math::Tensor;

use super::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `max(1 - s, 0)`
    Hinge,
    /// `max(-s, 0)`, the zero-margin hinge used in the linear toy example.
    DraftHinge,
    /// `log(1 + exp(-s))`
    Logistic,
    SoftmaxCe,
    /// `1{s <= 0}`; evaluation only.
    ZeroOne,
}

/// A loss kind with an optional upper clip `B`: the value is `min(phi, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub kind: LossKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl Loss {
    pub const fn new(kind: LossKind) -> Self {
        Self { kind, bound: None }
    }

    pub fn clipped(kind: LossKind, bound: f64) -> Self {
        Self {
            kind,
            bound: Some(bound),
        }
    }

    pub fn hinge() -> Self {
        Self::new(LossKind::Hinge)
    }

    pub fn logistic() -> Self {
        Self::new(LossKind::Logistic)
    }

    /// Lipschitz constant of `phi` in the margin.
    pub fn lipschitz(&self) -> Option<f64> {
        match self.kind {
            LossKind::Hinge | LossKind::DraftHinge | LossKind::Logistic => Some(1.0),
            LossKind::SoftmaxCe | LossKind::ZeroOne => None,
        }
    }

    /// `phi(margin)` for the margin-based kinds, clip included.
    pub fn phi(&self, margin: f64) -> Result<f64> {
        let raw = match self.kind {
            LossKind::Hinge => relu(1.0 - margin),
            LossKind::DraftHinge => relu(-margin),
            LossKind::Logistic => logsumexp(&[0.0, -margin]),
            LossKind::ZeroOne => {
                if margin <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LossKind::SoftmaxCe => {
                return Err(Error::BadSpec(
                    "softmax cross-entropy is not a margin loss".into(),
                ))
            }
        };
        Ok(self.clip(raw))
    }

    pub(crate) fn clip(&self, raw: f64) -> f64 {
        match self.bound {
            Some(b) => raw - relu(raw - b),
            None => raw,
        }
    }

    /// Loss of pre-computed scores against a label.
    pub fn of_scores(&self, scores: &[f64], label: Label) -> Result<f64> {
        match (label, self.kind) {
            (Label::Binary(y), LossKind::SoftmaxCe) => Err(Error::BadLabel {
                label: y.to_string(),
                reason: "softmax cross-entropy needs a class label",
            }),
            (Label::Binary(y), _) => {
                if scores.len() != 1 {
                    return Err(Error::ShapeMismatch {
                        op: "binary loss",
                        lhs: vec![1],
                        rhs: vec![scores.len()],
                    });
                }
                self.phi(y * scores[0])
            }
            (Label::Class(k), kind) => {
                if k >= scores.len() {
                    return Err(Error::BadLabel {
                        label: k.to_string(),
                        reason: "class index exceeds the number of scores",
                    });
                }
                match kind {
                    LossKind::SoftmaxCe => {
                        Ok(self.clip(logsumexp(scores) - true_class_score(scores, k)))
                    }
                    LossKind::ZeroOne => {
                        let (pred, _) = argmax_lowest(scores).expect("nonempty");
                        Ok(if pred == k { 0.0 } else { 1.0 })
                    }
                    _ => self.phi(true_class_score(scores, k)),
                }
            }
        }
    }
}

/// `y^T s` for a one-hot `y` at index `k`, accumulated like the tape does.
pub(crate) fn true_class_score(scores: &[f64], k: usize) -> f64 {
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| s * if i == k { 1.0 } else { 0.0 })
        .sum()
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// A binary label in `{-1, +1}` or a class index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Binary(f64),
    Class(usize),
}

impl Label {
    pub fn binary(y: f64) -> Result<Self> {
        if y == 1.0 || y == -1.0 {
            Ok(Label::Binary(y))
        } else {
            Err(Error::BadLabel {
                label: y.to_string(),
                reason: "binary labels are -1 or +1",
            })
        }
    }

    pub fn one_hot(self, classes: usize) -> Option<Tensor> {
        match self {
            Label::Class(k) if k < classes => {
                let mut t = Tensor::zeros(&[classes]);
                t.data_mut()[k] = 1.0;
                Some(t)
            }
            _ => None,
        }
    }

    /// Text form used in CSV files.
    pub fn to_field(self) -> String {
        match self {
            Label::Binary(y) => format!("{}", y as i64),
            Label::Class(k) => k.to_string(),
        }
    }
}

/// One `(x, y)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: Tensor,
    pub y: Label,
}

impl LabeledExample {
    pub fn new(x: Vec<f64>, y: Label) -> Self {
        Self {
            x: Tensor::vector(x),
            y,
        }
    }
}

impl Model {
    /// Loss of the model on one example.
    pub fn loss(&self, loss: &Loss, x: &Tensor, y: Label) -> Result<f64> {
        let scores = self.forward(x)?;
        loss.of_scores(scores.data(), y)
    }

    /// Whether the model classifies the example correctly; margin `<= 0` counts as an error.
    pub fn correct(&self, x: &[f64], y: Label) -> bool {
        let s = self.forward_slice(x);
        match y {
            Label::Binary(v) => v * s[0] > 0.0,
            Label::Class(k) => argmax_lowest(&s).map(|(i, _)| i) == Some(k),
        }
    }
}

/// `phi(y^T f(x))` for a one-hot target vector.
pub fn multiclass_margin_loss(model: &Model, loss: &Loss, x: &Tensor, y: &Tensor) -> Result<f64> {
    let ones = y.data().iter().filter(|&&v| v == 1.0).count();
    let zeros = y.data().iter().filter(|&&v| v == 0.0).count();
    if ones != 1 || ones + zeros != y.len() {
        return Err(Error::NotOneHot(y.data().to_vec()));
    }
    let scores = model.forward(x)?;
    if scores.len() != y.len() {
        return Err(Error::ShapeMismatch {
            op: "multiclass_margin_loss",
            lhs: scores.shape().to_vec(),
            rhs: y.shape().to_vec(),
        });
    }
    let k = y.data().iter().position(|&v| v == 1.0).expect("one hot");
    loss.phi(true_class_score(scores.data(), k))
}
