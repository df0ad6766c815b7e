//! Loss gradients through the tape, with respect to parameters and inputs.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::math::Tensor;

use super::{Activation, Label, Loss, LossKind, Model};

/// Loss value plus whichever gradients were requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    /// Flattened in [`Model::flat_params`] order.
    pub params: Option<Vec<f64>>,
    pub input: Option<Tensor>,
}

/// Record the model and loss on a fresh tape and run one backward sweep.
pub fn loss_and_gradients(
    model: &Model,
    loss: &Loss,
    x: &Tensor,
    y: Label,
    wrt_params: bool,
    wrt_input: bool,
) -> Result<Gradients> {
    if x.shape() != [model.input_dim()] {
        return Err(Error::ShapeMismatch {
            op: "loss_and_gradients",
            lhs: vec![model.input_dim()],
            rhs: x.shape().to_vec(),
        });
    }
    let mut tape = Tape::new();
    let x_var = tape.leaf(x.clone());
    let mut param_vars = Vec::with_capacity(2 * model.layers.len());
    let mut h = x_var;
    let last = model.layers.len() - 1;
    for (i, layer) in model.layers.iter().enumerate() {
        let w = tape.leaf(layer.weight.clone());
        param_vars.push(w);
        h = tape.matmul(w, h)?;
        if let Some(b) = &layer.bias {
            let b = tape.leaf(b.clone());
            param_vars.push(b);
            h = tape.add(h, b)?;
        }
        if i < last {
            h = match model.activation.unwrap_or(Activation::Relu) {
                Activation::Relu => tape.relu(h)?,
                Activation::Tanh => tape.tanh(h)?,
            };
        }
    }
    let out = loss_on_tape(&mut tape, loss, h, y)?;
    let value = tape.value(out).item().expect("scalar loss");

    let mut wrt: Vec<Var> = Vec::new();
    if wrt_input {
        wrt.push(x_var);
    }
    if wrt_params {
        wrt.extend_from_slice(&param_vars);
    }
    let mut grads = tape.backward(out, &wrt)?.into_iter();
    let input = if wrt_input { grads.next() } else { None };
    let params = wrt_params.then(|| grads.flat_map(Tensor::into_data).collect());
    Ok(Gradients {
        loss: value,
        params,
        input,
    })
}

/// `grad_x L(x, theta)`.
pub fn grad_wrt_input(model: &Model, loss: &Loss, x: &Tensor, y: Label) -> Result<Tensor> {
    Ok(loss_and_gradients(model, loss, x, y, false, true)?
        .input
        .expect("requested"))
}

/// Loss and `grad_theta L(x, theta)`, flattened.
pub fn param_gradient(model: &Model, loss: &Loss, x: &Tensor, y: Label) -> Result<(f64, Vec<f64>)> {
    let g = loss_and_gradients(model, loss, x, y, true, false)?;
    Ok((g.loss, g.params.expect("requested")))
}

/// Append the loss of `scores` against `y`; returns a scalar variable.
pub(crate) fn loss_on_tape(tape: &mut Tape, loss: &Loss, scores: Var, y: Label) -> Result<Var> {
    if loss.kind == LossKind::ZeroOne {
        return Err(Error::GradientOfZeroOne);
    }
    let n_scores = tape.value(scores).len();
    let raw = match y {
        Label::Binary(v) => {
            if loss.kind == LossKind::SoftmaxCe {
                return Err(Error::BadLabel {
                    label: v.to_string(),
                    reason: "softmax cross-entropy needs a class label",
                });
            }
            if n_scores != 1 {
                return Err(Error::ShapeMismatch {
                    op: "binary loss",
                    lhs: vec![1],
                    rhs: vec![n_scores],
                });
            }
            let margin = tape.scale(scores, v)?;
            margin_phi(tape, loss.kind, margin)?
        }
        Label::Class(k) => {
            let one_hot = Label::Class(k).one_hot(n_scores).ok_or(Error::BadLabel {
                label: k.to_string(),
                reason: "class index exceeds the number of scores",
            })?;
            let one_hot = tape.leaf(one_hot);
            let picked = tape.mul(scores, one_hot)?;
            let true_score = tape.sum(picked)?;
            if loss.kind == LossKind::SoftmaxCe {
                let lse = tape.logsumexp(scores)?;
                tape.sub(lse, true_score)?
            } else {
                margin_phi(tape, loss.kind, true_score)?
            }
        }
    };
    let clipped = match loss.bound {
        Some(b) => {
            let bound = tape.leaf(Tensor::full(tape.value(raw).shape(), b));
            let excess = tape.sub(raw, bound)?;
            let excess = tape.relu(excess)?;
            tape.sub(raw, excess)?
        }
        None => raw,
    };
    tape.sum(clipped)
}

fn margin_phi(tape: &mut Tape, kind: LossKind, margin: Var) -> Result<Var> {
    let shape = tape.value(margin).shape().to_vec();
    match kind {
        LossKind::Hinge => {
            let one = tape.leaf(Tensor::full(&shape, 1.0));
            let slack = tape.sub(one, margin)?;
            tape.relu(slack)
        }
        LossKind::DraftHinge => {
            let neg = tape.neg(margin)?;
            tape.relu(neg)
        }
        LossKind::Logistic => {
            let zero = tape.leaf(Tensor::vector(vec![0.0]));
            let neg = tape.neg(margin)?;
            let pair = tape.concat(&[zero, neg])?;
            tape.logsumexp(pair)
        }
        LossKind::SoftmaxCe | LossKind::ZeroOne => unreachable!("handled by caller"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RngStream;

    #[test]
    fn linear_hinge_input_gradient_is_minus_y_theta() {
        let theta = vec![0.5, -1.0, 2.0];
        let m = Model::linear(theta.clone());
        let x = Tensor::vector(vec![0.1, 0.2, 0.1]);
        let g = grad_wrt_input(&m, &Loss::hinge(), &x, Label::Binary(-1.0)).unwrap();
        assert_eq!(g.data(), theta.as_slice());
        let g = grad_wrt_input(&m, &Loss::hinge(), &x, Label::Binary(1.0)).unwrap();
        let expected: Vec<f64> = theta.iter().map(|t| -t).collect();
        assert_eq!(g.data(), expected.as_slice());
    }

    #[test]
    fn flat_region_has_zero_gradient() {
        let m = Model::linear(vec![1.0, 1.0]);
        let x = Tensor::vector(vec![3.0, 3.0]);
        let g = grad_wrt_input(&m, &Loss::hinge(), &x, Label::Binary(1.0)).unwrap();
        assert_eq!(g, Tensor::zeros(&[2]));
    }

    #[test]
    fn zero_one_has_no_gradient() {
        let m = Model::linear(vec![1.0]);
        let res = grad_wrt_input(
            &m,
            &Loss::new(LossKind::ZeroOne),
            &Tensor::vector(vec![1.0]),
            Label::Binary(1.0),
        );
        assert!(matches!(res, Err(Error::GradientOfZeroOne)));
    }

    #[test]
    fn tape_loss_equals_fast_loss_bitwise() {
        let mut rng = RngStream::new(5, 5);
        let m = Model::mlp(&[4, 6, 3], Activation::Tanh, &mut rng).unwrap();
        let b = Model::mlp(&[4, 5, 1], Activation::Relu, &mut rng).unwrap();
        for _ in 0..50 {
            let x = Tensor::vector((0..4).map(|_| rng.standard_normal()).collect());
            for loss in [
                Loss::new(LossKind::SoftmaxCe),
                Loss::logistic(),
                Loss::clipped(LossKind::Hinge, 0.7),
            ] {
                let y = Label::Class(rng.below(3));
                let g = loss_and_gradients(&m, &loss, &x, y, true, true).unwrap();
                assert_eq!(g.loss, m.loss(&loss, &x, y).unwrap());
            }
            for loss in [
                Loss::hinge(),
                Loss::logistic(),
                Loss::new(LossKind::DraftHinge),
            ] {
                let y = Label::Binary(rng.sign());
                let g = loss_and_gradients(&b, &loss, &x, y, true, false).unwrap();
                assert_eq!(g.loss, b.loss(&loss, &x, y).unwrap());
            }
        }
    }
}
