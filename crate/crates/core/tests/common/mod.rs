//! Central-difference gradient checks shared by the integration and acceptance targets.

use maxup_lab::autodiff::{Tape, Var};
use maxup_lab::math::{RngStream, Tensor};
use maxup_lab::models::{loss_and_gradients, Activation, Label, Loss, LossKind, Model};

const H: f64 = 1e-4;
const REL: f64 = 1e-6;
const PROBES: u64 = 100;

type Build = dyn Fn(&mut Tape, &[Var]) -> Var;

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= REL * analytic.abs().max(numeric.abs()).max(1.0)
}

/// `sum(w * f(inputs))` for fixed random weights `w`, so non-scalar outputs are checked in every coordinate.
fn scalarized(
    build: &Build,
    inputs: &[Tensor],
    weights: &mut Option<Tensor>,
    rng: &mut RngStream,
) -> (Tape, Var, Vec<Var>) {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = build(&mut tape, &vars);
    let shape = tape.value(out).shape().to_vec();
    let w = weights.get_or_insert_with(|| {
        let n = shape.iter().product::<usize>().max(1);
        Tensor::new(
            shape.clone(),
            (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
        )
        .unwrap()
    });
    let wv = tape.leaf(w.clone());
    let prod = tape.mul(out, wv).unwrap();
    let s = tape.sum(prod).unwrap();
    (tape, s, vars)
}

fn gradcheck(name: &str, build: &Build, inputs: Vec<Tensor>, rng: &mut RngStream) {
    let mut weights = None;
    let (tape, out, vars) = scalarized(build, &inputs, &mut weights, rng);
    let grads = tape.backward(out, &vars).unwrap();
    for (k, input) in inputs.iter().enumerate() {
        for j in 0..input.len() {
            let mut eval = |delta: f64| {
                let mut shifted = inputs.clone();
                shifted[k].data_mut()[j] += delta;
                let (tape, out, _) = scalarized(build, &shifted, &mut weights.clone(), rng);
                tape.value(out).item().unwrap()
            };
            let numeric = (eval(H) - eval(-H)) / (2.0 * H);
            let analytic = grads[k].data()[j];
            assert!(
                close(analytic, numeric),
                "{name}: input {k}[{j}] analytic {analytic} numeric {numeric}"
            );
        }
    }
}

fn random(shape: &[usize], lo: f64, hi: f64, rng: &mut RngStream) -> Tensor {
    let n = shape.iter().product::<usize>().max(1);
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.uniform_range(lo, hi)).collect(),
    )
    .unwrap()
}

/// Uniform in `[-hi, -lo] U [lo, hi]`, away from the relu kink.
fn away_from_zero(n: usize, lo: f64, hi: f64, rng: &mut RngStream) -> Tensor {
    Tensor::vector(
        (0..n)
            .map(|_| rng.sign() * rng.uniform_range(lo, hi))
            .collect(),
    )
}

fn probes(tag: u64, mut each: impl FnMut(&mut RngStream)) {
    for i in 0..PROBES {
        let mut rng = RngStream::derived(0x9c, &[tag, i]);
        each(&mut rng);
    }
}

fn dims(rng: &mut RngStream) -> usize {
    1 + rng.below(5)
}

pub fn elementwise_binary_primitives() {
    probes(1, |rng| {
        let n = dims(rng);
        let a = random(&[n], -2.0, 2.0, rng);
        let b = random(&[n], -2.0, 2.0, rng);
        gradcheck(
            "add",
            &|t, v| t.add(v[0], v[1]).unwrap(),
            vec![a.clone(), b.clone()],
            rng,
        );
        gradcheck(
            "sub",
            &|t, v| t.sub(v[0], v[1]).unwrap(),
            vec![a.clone(), b.clone()],
            rng,
        );
        gradcheck("mul", &|t, v| t.mul(v[0], v[1]).unwrap(), vec![a, b], rng);
    });
}

pub fn matmul_primitive() {
    probes(2, |rng| {
        let (m, k, n) = (dims(rng), dims(rng), dims(rng));
        let a = random(&[m, k], -1.5, 1.5, rng);
        let b = random(&[k, n], -1.5, 1.5, rng);
        let x = random(&[k], -1.5, 1.5, rng);
        gradcheck(
            "matmul",
            &|t, v| t.matmul(v[0], v[1]).unwrap(),
            vec![a.clone(), b],
            rng,
        );
        gradcheck(
            "matvec",
            &|t, v| t.matmul(v[0], v[1]).unwrap(),
            vec![a, x],
            rng,
        );
    });
}

pub fn unary_primitives() {
    probes(3, |rng| {
        let n = dims(rng);
        let x = random(&[n], -2.0, 2.0, rng);
        let pos = random(&[n], 0.2, 3.0, rng);
        let c = rng.uniform_range(-3.0, 3.0);
        let kinkless = away_from_zero(n, 0.05, 2.0, rng);
        gradcheck("relu", &|t, v| t.relu(v[0]).unwrap(), vec![kinkless], rng);
        gradcheck("tanh", &|t, v| t.tanh(v[0]).unwrap(), vec![x.clone()], rng);
        gradcheck("exp", &|t, v| t.exp(v[0]).unwrap(), vec![x.clone()], rng);
        gradcheck("log", &|t, v| t.log(v[0]).unwrap(), vec![pos], rng);
        gradcheck("neg", &|t, v| t.neg(v[0]).unwrap(), vec![x.clone()], rng);
        gradcheck(
            "scale",
            &move |t, v| t.scale(v[0], c).unwrap(),
            vec![x],
            rng,
        );
    });
}

pub fn reductions() {
    probes(4, |rng| {
        let n = 2 + dims(rng);
        let x = random(&[n], -2.0, 2.0, rng);
        gradcheck("sum", &|t, v| t.sum(v[0]).unwrap(), vec![x.clone()], rng);
        gradcheck(
            "logsumexp",
            &|t, v| t.logsumexp(v[0]).unwrap(),
            vec![x],
            rng,
        );
        // distinct values at least 0.01 apart, so no tie is within reach of the step
        let mut vals: Vec<f64> = (0..n)
            .map(|i| i as f64 * 0.3 + rng.uniform_range(0.0, 0.29))
            .collect();
        rng.shuffle(&mut vals);
        gradcheck(
            "max_reduce",
            &|t, v| t.max_reduce(v[0]).unwrap(),
            vec![Tensor::vector(vals)],
            rng,
        );
    });
}

pub fn concat_primitive() {
    probes(5, |rng| {
        let a = random(&[dims(rng)], -1.0, 1.0, rng);
        let b = random(&[dims(rng)], -1.0, 1.0, rng);
        let s = Tensor::scalar(rng.uniform_range(-1.0, 1.0));
        gradcheck(
            "concat",
            &|t, v| t.concat(&[v[0], v[1], v[2]]).unwrap(),
            vec![a, s, b],
            rng,
        );
    });
}

pub fn composed_expression() {
    probes(6, |rng| {
        let n = dims(rng);
        let w = random(&[n, n], -1.0, 1.0, rng);
        let x = random(&[n], -1.0, 1.0, rng);
        gradcheck(
            "composed",
            &|t, v| {
                let h = t.matmul(v[0], v[1]).unwrap();
                let h = t.tanh(h).unwrap();
                let e = t.exp(h).unwrap();
                let p = t.mul(e, v[1]).unwrap();
                let s = t.logsumexp(p).unwrap();
                let q = t.scale(s, 0.7).unwrap();
                let both = t.concat(&[q, h]).unwrap();
                t.sum(both).unwrap()
            },
            vec![w, x],
            rng,
        );
    });
}

fn check_model(model: &Model, loss: &Loss, x: &Tensor, y: Label) {
    let g = loss_and_gradients(model, loss, x, y, true, true).unwrap();
    let f = |m: &Model, x: &Tensor| m.loss(loss, x, y).unwrap();
    for j in 0..x.len() {
        let mut up = x.clone();
        up.data_mut()[j] += H;
        let mut down = x.clone();
        down.data_mut()[j] -= H;
        let numeric = (f(model, &up) - f(model, &down)) / (2.0 * H);
        let analytic = g.input.as_ref().unwrap().data()[j];
        assert!(
            close(analytic, numeric),
            "input {j}: {analytic} vs {numeric}"
        );
    }
    let params = model.flat_params();
    for j in 0..params.len() {
        let shifted = |delta: f64| {
            let mut p = params.clone();
            p[j] += delta;
            let mut m = model.clone();
            m.set_flat_params(&p).unwrap();
            f(&m, x)
        };
        let numeric = (shifted(H) - shifted(-H)) / (2.0 * H);
        let analytic = g.params.as_ref().unwrap()[j];
        assert!(
            close(analytic, numeric),
            "param {j}: {analytic} vs {numeric}"
        );
    }
}

pub fn composed_mlp_losses() {
    probes(7, |rng| {
        let d = 2 + dims(rng);
        let x = random(&[d], -1.5, 1.5, rng);
        let model = Model::mlp(&[d, 6, 4, 1], Activation::Tanh, rng).unwrap();
        check_model(&model, &Loss::logistic(), &x, Label::Binary(rng.sign()));
        let multi = Model::mlp(&[d, 5, 3], Activation::Tanh, rng).unwrap();
        let ce = Loss {
            kind: LossKind::SoftmaxCe,
            bound: None,
        };
        check_model(&multi, &ce, &x, Label::Class(rng.below(3)));
    });
}

pub fn relu_mlp_away_from_kinks() {
    let mut checked = 0;
    probes(8, |rng| {
        let d = 3;
        let x = random(&[d], -1.5, 1.5, rng);
        let model = Model::mlp(&[d, 5, 1], Activation::Relu, rng).unwrap();
        let pre = model.hidden_preactivations(x.data());
        let scale = x.data().iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        if pre.iter().any(|p| p.abs() < 100.0 * H * scale) {
            return;
        }
        checked += 1;
        check_model(&model, &Loss::logistic(), &x, Label::Binary(1.0));
    });
    assert!(checked >= 50, "only {checked} probes were kink-free");
}

pub fn gradients_are_linear_in_the_output() {
    probes(9, |rng| {
        let x = random(&[4], -1.0, 1.0, rng);
        let (a, b) = (rng.uniform_range(-2.0, 2.0), rng.uniform_range(-2.0, 2.0));
        let grad_of = |coef: (f64, f64)| {
            let mut t = Tape::new();
            let v = t.leaf(x.clone());
            let f = t.tanh(v).unwrap();
            let f = t.sum(f).unwrap();
            let g = t.exp(v).unwrap();
            let g = t.sum(g).unwrap();
            let f = t.scale(f, coef.0).unwrap();
            let g = t.scale(g, coef.1).unwrap();
            let h = t.add(f, g).unwrap();
            t.backward(h, &[v]).unwrap().remove(0)
        };
        let combined = grad_of((a, b));
        let gf = grad_of((1.0, 0.0));
        let gg = grad_of((0.0, 1.0));
        for j in 0..4 {
            let expect = a * gf.data()[j] + b * gg.data()[j];
            assert!((combined.data()[j] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    });
}

pub fn max_reduce_ignores_small_perturbations_of_losers() {
    probes(10, |rng| {
        let n = 3 + dims(rng);
        let vals: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let (best, top) = maxup_lab::autodiff::argmax_lowest(&vals).unwrap();
        let mut t = Tape::new();
        let v = t.leaf(Tensor::vector(vals.clone()));
        let m = t.max_reduce(v).unwrap();
        let g = t.backward(m, &[v]).unwrap().remove(0);
        for (j, &gj) in g.data().iter().enumerate() {
            assert_eq!(gj, if j == best { 1.0 } else { 0.0 });
        }
        for j in (0..n).filter(|&j| j != best) {
            let mut bumped = vals.clone();
            bumped[j] += 0.5 * (top - vals[j]);
            assert_eq!(
                maxup_lab::autodiff::argmax_lowest(&bumped).unwrap(),
                (best, top)
            );
        }
    });
}
