//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! A [`Tape`] records primitives eagerly: every call computes its value
//! immediately and appends a node. [`Tape::backward`] then sweeps the nodes
//! once in reverse order. Inputs always precede their consumers, so the
//! sweep is a valid reverse topological order.
//!
//! Tapes are meant to live for one evaluation and be dropped afterwards.
//! Only first derivatives are available.
//!
//! ```
//! use maxup_lab::autodiff::Tape;
//! use maxup_lab::math::Tensor;
//!
//! let mut tape = Tape::new();
//! let x = tape.leaf(Tensor::vector(vec![3.0]));
//! let y = tape.mul(x, x).unwrap();
//! let y = tape.sum(y).unwrap();
//! let grads = tape.backward(y, &[x]).unwrap();
//! assert_eq!(grads[0].data(), &[6.0]);
//! ```

use crate::error::{Error, Result};
use crate::math::Tensor;

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Primitive operations the tape knows how to differentiate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Add,
    Sub,
    /// Elementwise product.
    Mul,
    /// `[m, k] x [k, n]` or `[m, k] x [k]`.
    Matmul,
    Relu,
    Tanh,
    Exp,
    Log,
    /// Full reduction to a scalar.
    Sum,
    /// Full reduction to the largest element; ties go to the lowest index.
    MaxReduce,
    /// Full reduction, `log(sum(exp(x)))`.
    Logsumexp,
    Neg,
    Scale(f64),
    /// Concatenation of one-dimensional (or scalar) operands.
    Concat,
}

#[derive(Debug, Clone)]
struct Node {
    op: Option<Primitive>,
    inputs: Vec<usize>,
    value: Tensor,
    /// Argmax position for `MaxReduce`.
    argmax: usize,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A differentiable input (or a constant: a leaf nobody asks about).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            op: None,
            inputs: Vec::new(),
            value,
            argmax: 0,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn check(&self, v: Var) -> Result<&Tensor> {
        self.nodes
            .get(v.0)
            .map(|n| &n.value)
            .ok_or(Error::UnknownVariable(v.0))
    }

    /// Evaluate `primitive` on `inputs` and append it to the tape.
    pub fn record(&mut self, primitive: Primitive, inputs: &[Var]) -> Result<Var> {
        use Primitive::*;
        let arity = match primitive {
            Add | Sub | Mul | Matmul => 2,
            Concat => inputs.len().max(1),
            _ => 1,
        };
        if inputs.len() != arity {
            return Err(Error::BadSpec(format!(
                "{primitive:?} takes {arity} operand(s), got {}",
                inputs.len()
            )));
        }
        for &v in inputs {
            self.check(v)?;
        }
        let a = &self.nodes[inputs[0].0].value;
        let mut argmax = 0;
        let value = match primitive {
            Add => a.zip_map(&self.nodes[inputs[1].0].value, "add", |x, y| x + y)?,
            Sub => a.zip_map(&self.nodes[inputs[1].0].value, "sub", |x, y| x - y)?,
            Mul => a.zip_map(&self.nodes[inputs[1].0].value, "mul", |x, y| x * y)?,
            Matmul => a.matmul(&self.nodes[inputs[1].0].value)?,
            Relu => a.map(|x| if x > 0.0 { x } else { 0.0 }),
            Tanh => a.map(f64::tanh),
            Exp => a.map(f64::exp),
            Log => {
                if let Some(&bad) = a.data().iter().find(|&&x| !(x > 0.0)) {
                    return Err(Error::Domain {
                        op: "log",
                        value: bad,
                    });
                }
                a.map(f64::ln)
            }
            Sum => Tensor::scalar(a.data().iter().sum()),
            MaxReduce => {
                let (idx, max) = argmax_lowest(a.data()).ok_or(Error::ShapeMismatch {
                    op: "max_reduce",
                    lhs: a.shape().to_vec(),
                    rhs: vec![],
                })?;
                argmax = idx;
                Tensor::scalar(max)
            }
            Logsumexp => {
                if a.is_empty() {
                    return Err(Error::ShapeMismatch {
                        op: "logsumexp",
                        lhs: a.shape().to_vec(),
                        rhs: vec![],
                    });
                }
                Tensor::scalar(logsumexp(a.data()))
            }
            Neg => a.map(|x| -x),
            Scale(c) => a.map(|x| c * x),
            Concat => {
                let mut data = Vec::new();
                for &v in inputs {
                    let t = &self.nodes[v.0].value;
                    if t.shape().len() > 1 {
                        return Err(Error::ShapeMismatch {
                            op: "concat",
                            lhs: t.shape().to_vec(),
                            rhs: vec![],
                        });
                    }
                    data.extend_from_slice(t.data());
                }
                Tensor::vector(data)
            }
        };
        self.nodes.push(Node {
            op: Some(primitive),
            inputs: inputs.iter().map(|v| v.0).collect(),
            value,
            argmax,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Primitive::Add, &[a, b])
    }
    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Primitive::Sub, &[a, b])
    }
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Primitive::Mul, &[a, b])
    }
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Primitive::Matmul, &[a, b])
    }
    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.record(Primitive::Relu, &[a])
    }
    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.record(Primitive::Tanh, &[a])
    }
    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.record(Primitive::Exp, &[a])
    }
    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.record(Primitive::Log, &[a])
    }
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.record(Primitive::Sum, &[a])
    }
    pub fn max_reduce(&mut self, a: Var) -> Result<Var> {
        self.record(Primitive::MaxReduce, &[a])
    }
    pub fn logsumexp(&mut self, a: Var) -> Result<Var> {
        self.record(Primitive::Logsumexp, &[a])
    }
    pub fn neg(&mut self, a: Var) -> Result<Var> {
        self.record(Primitive::Neg, &[a])
    }
    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.record(Primitive::Scale(c), &[a])
    }
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        self.record(Primitive::Concat, parts)
    }

    /// Gradients of the scalar `output` with respect to each of `wrt`.
    ///
    /// Leaves that `output` does not depend on get zero tensors.
    pub fn backward(&self, output: Var, wrt: &[Var]) -> Result<Vec<Tensor>> {
        let out = self.check(output)?;
        if !out.is_scalar() {
            return Err(Error::NotScalarOutput(out.shape().to_vec()));
        }
        for &v in wrt {
            self.check(v)?;
        }
        let mut adjoint: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        adjoint[output.0] = Some(Tensor::full(out.shape(), 1.0));

        for idx in (0..=output.0).rev() {
            let Some(g) = adjoint[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            let Some(op) = node.op else {
                adjoint[idx] = Some(g);
                continue;
            };
            let contributions = self.local_gradients(node, op, &g)?;
            for (&input, contrib) in node.inputs.iter().zip(contributions) {
                match &mut adjoint[input] {
                    Some(acc) => acc.axpy(1.0, &contrib)?,
                    slot @ None => *slot = Some(contrib),
                }
            }
            // Interior nodes keep their adjoint so intermediate vars can be queried too.
            adjoint[idx] = Some(g);
        }

        Ok(wrt
            .iter()
            .map(|&v| match adjoint.get(v.0).and_then(|a| a.as_ref()) {
                Some(g) => g.clone(),
                None => Tensor::zeros(self.nodes[v.0].value.shape()),
            })
            .collect())
    }

    fn local_gradients(&self, node: &Node, op: Primitive, g: &Tensor) -> Result<Vec<Tensor>> {
        use Primitive::*;
        let input = |k: usize| &self.nodes[node.inputs[k]].value;
        let broadcast = |shape: &[usize], v: f64| Tensor::full(shape, v);
        Ok(match op {
            Add => vec![g.clone(), g.clone()],
            Sub => vec![g.clone(), g.map(|v| -v)],
            Mul => vec![
                g.zip_map(input(1), "mul", |a, b| a * b)?,
                g.zip_map(input(0), "mul", |a, b| a * b)?,
            ],
            Matmul => {
                let (a, b) = (input(0), input(1));
                if b.shape().len() == 1 {
                    // y = A x: dA = g x^T, dx = A^T g
                    let (m, k) = (a.shape()[0], a.shape()[1]);
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        for j in 0..k {
                            da[i * k + j] = g.data()[i] * b.data()[j];
                        }
                    }
                    let dx = a.transpose()?.matmul(g)?;
                    vec![Tensor::matrix(m, k, da)?, dx]
                } else {
                    vec![g.matmul(&b.transpose()?)?, a.transpose()?.matmul(g)?]
                }
            }
            Relu => vec![g.zip_map(input(0), "relu", |gv, x| if x > 0.0 { gv } else { 0.0 })?],
            Tanh => vec![g.zip_map(&node.value, "tanh", |gv, y| gv * (1.0 - y * y))?],
            Exp => vec![g.zip_map(&node.value, "exp", |gv, y| gv * y)?],
            Log => vec![g.zip_map(input(0), "log", |gv, x| gv / x)?],
            Sum => vec![broadcast(input(0).shape(), g.data()[0])],
            MaxReduce => {
                let mut d = Tensor::zeros(input(0).shape());
                d.data_mut()[node.argmax] = g.data()[0];
                vec![d]
            }
            Logsumexp => {
                let lse = node.value.data()[0];
                vec![input(0).map(|x| g.data()[0] * (x - lse).exp())]
            }
            Neg => vec![g.map(|v| -v)],
            Scale(c) => vec![g.map(|v| c * v)],
            Concat => {
                let mut offset = 0;
                node.inputs
                    .iter()
                    .map(|&i| {
                        let n = self.nodes[i].value.len();
                        let part = Tensor::vector(g.data()[offset..offset + n].to_vec());
                        offset += n;
                        part
                    })
                    .collect()
            }
        })
    }
}

/// Index and value of the largest element, lowest index on ties.
pub fn argmax_lowest(values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Numerically stable `log(sum(exp(x)))`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(data: &[f64]) -> Tensor {
        Tensor::vector(data.to_vec())
    }

    #[test]
    fn eager_values() {
        let mut t = Tape::new();
        let a = t.leaf(v(&[1., 2.]));
        let b = t.leaf(v(&[3., 4.]));
        let s = t.add(a, b).unwrap();
        assert_eq!(t.value(s).data(), &[4., 6.]);
        let r = t.leaf(v(&[-1., 2.]));
        let r = t.relu(r).unwrap();
        assert_eq!(t.value(r).data(), &[0., 2.]);
    }

    #[test]
    fn square_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::scalar(3.0));
        let y = t.mul(x, x).unwrap();
        assert_eq!(t.backward(y, &[x]).unwrap()[0].data(), &[6.0]);
    }

    #[test]
    fn unreachable_leaf_gets_zero() {
        let mut t = Tape::new();
        let x = t.leaf(v(&[1., 2., 3.]));
        let dead = t.leaf(v(&[5., 5.]));
        let y = t.sum(x).unwrap();
        let g = t.backward(y, &[x, dead]).unwrap();
        assert_eq!(g[0].data(), &[1., 1., 1.]);
        assert_eq!(g[1], Tensor::zeros(&[2]));
    }

    #[test]
    fn non_scalar_output_rejected() {
        let mut t = Tape::new();
        let x = t.leaf(v(&[1., 2.]));
        let y = t.tanh(x).unwrap();
        assert!(matches!(
            t.backward(y, &[x]),
            Err(Error::NotScalarOutput(_))
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut t = Tape::new();
        let a = t.leaf(v(&[1., 2.]));
        let b = t.leaf(v(&[1., 2., 3.]));
        assert!(matches!(t.add(a, b), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(t.matmul(a, b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn log_domain_checked() {
        let mut t = Tape::new();
        let a = t.leaf(v(&[1., 0.]));
        assert!(matches!(t.log(a), Err(Error::Domain { .. })));
    }

    #[test]
    fn max_reduce_ties_go_to_lowest_index() {
        let mut t = Tape::new();
        let a = t.leaf(v(&[1., 3., 3., 2.]));
        let m = t.max_reduce(a).unwrap();
        assert_eq!(t.value(m).item(), Some(3.0));
        assert_eq!(t.backward(m, &[a]).unwrap()[0].data(), &[0., 1., 0., 0.]);
    }

    #[test]
    fn relu_derivative_at_zero_is_zero() {
        let mut t = Tape::new();
        let a = t.leaf(v(&[0.0, 1.0]));
        let r = t.relu(a).unwrap();
        let s = t.sum(r).unwrap();
        assert_eq!(t.backward(s, &[a]).unwrap()[0].data(), &[0.0, 1.0]);
    }

    #[test]
    fn concat_splits_gradient() {
        let mut t = Tape::new();
        let a = t.leaf(v(&[1., 2.]));
        let b = t.leaf(v(&[3.]));
        let c = t.concat(&[a, b]).unwrap();
        let w = t.leaf(v(&[10., 20., 30.]));
        let p = t.mul(c, w).unwrap();
        let s = t.sum(p).unwrap();
        let g = t.backward(s, &[a, b]).unwrap();
        assert_eq!(g[0].data(), &[10., 20.]);
        assert_eq!(g[1].data(), &[30.]);
    }

    #[test]
    fn logsumexp_is_stable() {
        assert!((logsumexp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[0.0, -2000.0]), 0.0);
    }
}
