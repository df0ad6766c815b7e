//! ERM, average augmentation, worst-case augmentation and hard-example mining,
//! all driven by one plain SGD loop.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentationSpec;
use crate::autodiff::argmax_lowest;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::stats::pairwise_sum;
use crate::math::{RngStream, Tensor};
use crate::models::{grad_wrt_input, param_gradient, LabeledExample, Loss, Model};

const SHUFFLE_STREAM: u64 = 0x5af1;
const AUGMENT_STREAM: u64 = 0xa06;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Erm,
    AvgAug,
    Maxup,
    Ohem,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Erm, Method::AvgAug, Method::Maxup, Method::Ohem];

    pub fn name(self) -> &'static str {
        match self {
            Method::Erm => "erm",
            Method::AvgAug => "avg_aug",
            Method::Maxup => "maxup",
            Method::Ohem => "ohem",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    #[serde(default)]
    pub warmup_epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default)]
    pub spec: AugmentationSpec,
    #[serde(default = "Loss::logistic")]
    pub loss: Loss,
}

fn one() -> usize {
    1
}

fn default_batch() -> usize {
    32
}

impl TrainConfig {
    pub fn new(method: Method, m: usize, lr: f64, epochs: usize, seed: u64) -> Self {
        Self {
            method,
            m,
            batch_size: default_batch(),
            lr,
            epochs,
            warmup_epochs: 0,
            seed,
            weight_decay: 0.0,
            spec: AugmentationSpec::identity(),
            loss: Loss::logistic(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |key: &str, reason: String| {
            Err(Error::ConfigInvalid {
                key: key.to_string(),
                reason,
            })
        };
        if self.m == 0 {
            return invalid("m", "at least one copy is required".into());
        }
        if self.batch_size == 0 {
            return invalid("batch_size", "must be positive".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return invalid(
                "lr",
                format!("must be a nonnegative finite number, got {}", self.lr),
            );
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return invalid(
                "weight_decay",
                format!("must be nonnegative, got {}", self.weight_decay),
            );
        }
        if self.warmup_epochs > self.epochs {
            return invalid(
                "warmup_epochs",
                format!("{} exceeds epochs = {}", self.warmup_epochs, self.epochs),
            );
        }
        if let Some(b) = self.loss.bound {
            if !(b > 0.0) {
                return invalid("loss.bound", format!("must be positive, got {b}"));
            }
        }
        if self.loss.kind == crate::models::LossKind::ZeroOne {
            return invalid("loss.kind", "zero_one cannot be trained on".into());
        }
        self.spec
            .validate()
            .or_else(|e| invalid("spec", e.to_string()))
    }

    /// The configuration in force during `epoch`: warmup epochs are single-draw augmentation.
    pub fn for_epoch(&self, epoch: usize) -> TrainConfig {
        if epoch < self.warmup_epochs {
            TrainConfig {
                method: Method::AvgAug,
                m: 1,
                ..self.clone()
            }
        } else {
            self.clone()
        }
    }
}

/// Loss evaluations and backward sweeps performed by training steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub forward: u64,
    pub backward: u64,
}

/// What a step computed before applying the update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Gradient of the step objective, flattened like [`Model::flat_params`].
    pub gradient: Vec<f64>,
    /// Value of the step objective.
    pub objective: f64,
    /// Per example: the selected copy (maxup), or the selected example (ohem, one entry).
    pub selected: Vec<usize>,
}

fn check_batch(batch: &[LabeledExample], rngs: Option<&[RngStream]>) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(r) = rngs {
        if r.len() != batch.len() {
            return Err(Error::ShapeMismatch {
                op: "minibatch streams",
                lhs: vec![batch.len()],
                rhs: vec![r.len()],
            });
        }
    }
    Ok(())
}

/// Balanced binary-tree sum: `k` equal terms sum exactly when `k` is a power of two.
fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => tree_sum(&xs[..n / 2]) + tree_sum(&xs[n / 2..]),
    }
}

fn mean_of(rows: &[Vec<f64>]) -> Vec<f64> {
    let dim = rows[0].len();
    let n = rows.len() as f64;
    let mut col = vec![0.0; rows.len()];
    (0..dim)
        .map(|j| {
            for (c, r) in col.iter_mut().zip(rows) {
                *c = r[j];
            }
            tree_sum(&col) / n
        })
        .collect()
}

fn copies(cfg: &TrainConfig, x: &Tensor, rng: &mut RngStream) -> Result<Vec<Tensor>> {
    crate::augment::sample(&cfg.spec, x, cfg.m, rng)
}

/// Gradient of `(1/|B|) sum_x L(x)` on clean examples.
pub fn erm_gradient(
    model: &Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    counters: &mut Counters,
) -> Result<StepOutcome> {
    check_batch(batch, None)?;
    let mut grads = Vec::with_capacity(batch.len());
    let mut losses = Vec::with_capacity(batch.len());
    for e in batch {
        let (l, g) = param_gradient(model, &cfg.loss, &e.x, e.y)?;
        counters.forward += 1;
        counters.backward += 1;
        losses.push(l);
        grads.push(g);
    }
    Ok(StepOutcome {
        gradient: mean_of(&grads),
        objective: pairwise_sum(&losses) / batch.len() as f64,
        selected: Vec::new(),
    })
}

/// Gradient of `(1/|B|) sum_x (1/m) sum_i L(x'_i)`; every copy is backpropagated.
pub fn avg_aug_gradient(
    model: &Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    rngs: &mut [RngStream],
    counters: &mut Counters,
) -> Result<StepOutcome> {
    check_batch(batch, Some(rngs))?;
    let mut grads = Vec::with_capacity(batch.len());
    let mut losses = Vec::with_capacity(batch.len());
    for (e, rng) in batch.iter().zip(rngs.iter_mut()) {
        let mut copy_grads = Vec::with_capacity(cfg.m);
        let mut copy_losses = Vec::with_capacity(cfg.m);
        for x in copies(cfg, &e.x, rng)? {
            let (l, g) = param_gradient(model, &cfg.loss, &x, e.y)?;
            counters.forward += 1;
            counters.backward += 1;
            copy_losses.push(l);
            copy_grads.push(g);
        }
        losses.push(pairwise_sum(&copy_losses) / cfg.m as f64);
        grads.push(mean_of(&copy_grads));
    }
    Ok(StepOutcome {
        gradient: mean_of(&grads),
        objective: pairwise_sum(&losses) / batch.len() as f64,
        selected: Vec::new(),
    })
}

/// Gradient of `(1/|B|) sum_x max_i L(x'_i)`: only the worst copy of each example is backpropagated.
pub fn maxup_gradient(
    model: &Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    rngs: &mut [RngStream],
    counters: &mut Counters,
) -> Result<StepOutcome> {
    check_batch(batch, Some(rngs))?;
    let mut grads = Vec::with_capacity(batch.len());
    let mut losses = Vec::with_capacity(batch.len());
    let mut selected = Vec::with_capacity(batch.len());
    for (e, rng) in batch.iter().zip(rngs.iter_mut()) {
        let xs = copies(cfg, &e.x, rng)?;
        let copy_losses = xs
            .iter()
            .map(|x| model.loss(&cfg.loss, x, e.y))
            .collect::<Result<Vec<f64>>>()?;
        counters.forward += xs.len() as u64;
        let (worst, value) = argmax_lowest(&copy_losses).expect("m >= 1");
        let (_, g) = param_gradient(model, &cfg.loss, &xs[worst], e.y)?;
        counters.backward += 1;
        selected.push(worst);
        losses.push(value);
        grads.push(g);
    }
    Ok(StepOutcome {
        gradient: mean_of(&grads),
        objective: pairwise_sum(&losses) / batch.len() as f64,
        selected,
    })
}

/// Gradient of `max_{x in B} L(x)`: only the hardest clean example is backpropagated.
pub fn ohem_gradient(
    model: &Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    counters: &mut Counters,
) -> Result<StepOutcome> {
    check_batch(batch, None)?;
    let losses = batch
        .iter()
        .map(|e| model.loss(&cfg.loss, &e.x, e.y))
        .collect::<Result<Vec<f64>>>()?;
    counters.forward += batch.len() as u64;
    let (hardest, value) = argmax_lowest(&losses).expect("nonempty");
    let e = &batch[hardest];
    let (_, g) = param_gradient(model, &cfg.loss, &e.x, e.y)?;
    counters.backward += 1;
    Ok(StepOutcome {
        gradient: mean_of(&[g]),
        objective: value,
        selected: vec![hardest],
    })
}

/// Gradient of the configured method's step objective.
pub fn step_gradient(
    model: &Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    rngs: &mut [RngStream],
    counters: &mut Counters,
) -> Result<StepOutcome> {
    match cfg.method {
        Method::Erm => erm_gradient(model, batch, cfg, counters),
        Method::AvgAug => avg_aug_gradient(model, batch, cfg, rngs, counters),
        Method::Maxup => maxup_gradient(model, batch, cfg, rngs, counters),
        Method::Ohem => ohem_gradient(model, batch, cfg, counters),
    }
}

fn apply(model: &mut Model, cfg: &TrainConfig, outcome: &StepOutcome) -> Result<()> {
    model.sgd_update(&outcome.gradient, cfg.lr, cfg.weight_decay)
}

pub fn erm_step(
    model: &mut Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    counters: &mut Counters,
) -> Result<StepOutcome> {
    let out = erm_gradient(model, batch, cfg, counters)?;
    apply(model, cfg, &out)?;
    Ok(out)
}

pub fn avg_aug_minibatch_step(
    model: &mut Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    rngs: &mut [RngStream],
    counters: &mut Counters,
) -> Result<StepOutcome> {
    let out = avg_aug_gradient(model, batch, cfg, rngs, counters)?;
    apply(model, cfg, &out)?;
    Ok(out)
}

pub fn maxup_minibatch_step(
    model: &mut Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    rngs: &mut [RngStream],
    counters: &mut Counters,
) -> Result<StepOutcome> {
    let out = maxup_gradient(model, batch, cfg, rngs, counters)?;
    apply(model, cfg, &out)?;
    Ok(out)
}

pub fn ohem_step(
    model: &mut Model,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    counters: &mut Counters,
) -> Result<StepOutcome> {
    let out = ohem_gradient(model, batch, cfg, counters)?;
    apply(model, cfg, &out)?;
    Ok(out)
}

/// Stream for the augmentation copies of example `index` in `epoch`.
pub fn example_stream(seed: u64, epoch: usize, index: usize) -> RngStream {
    RngStream::derived(seed, &[AUGMENT_STREAM, epoch as u64, index as u64])
}

/// Seeded visiting order for one epoch.
pub fn epoch_permutation(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    RngStream::derived(seed, &[SHUFFLE_STREAM, epoch as u64]).shuffle(&mut order);
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub mean_input_grad_norm: f64,
    pub forward_count: u64,
    pub backward_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn totals(&self) -> Counters {
        self.records
            .iter()
            .fold(Counters::default(), |acc, r| Counters {
                forward: acc.forward + r.forward_count,
                backward: acc.backward + r.backward_count,
            })
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "epoch,train_loss,test_loss,train_acc,test_acc,mean_input_grad_norm,forward_count,backward_count\n",
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?},{:?},{:?},{},{}",
                r.epoch,
                r.train_loss,
                r.test_loss,
                r.train_acc,
                r.test_acc,
                r.mean_input_grad_norm,
                r.forward_count,
                r.backward_count
            );
        }
        s
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Mean clean loss and accuracy; `NaN` on an empty set.
pub fn evaluate(model: &Model, loss: &Loss, data: &Dataset) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let losses = data
        .examples
        .iter()
        .map(|e| model.loss(loss, &e.x, e.y))
        .collect::<Result<Vec<f64>>>()?;
    let correct = data
        .examples
        .iter()
        .filter(|e| model.correct(e.x.data(), e.y))
        .count();
    let n = data.len() as f64;
    Ok((pairwise_sum(&losses) / n, correct as f64 / n))
}

/// Mean of `||grad_x L(x, y)||_2` over the set.
pub fn mean_input_grad_norm(model: &Model, loss: &Loss, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let norms = data
        .examples
        .iter()
        .map(|e| Ok(grad_wrt_input(model, loss, &e.x, e.y)?.norm2()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&norms) / data.len() as f64)
}

/// Run `warmup_epochs` of single-draw augmentation, then the configured method.
pub fn train(
    model: &Model,
    train_set: &Dataset,
    test_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Model, TrainTrace)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    model.validate()?;
    let mut model = model.clone();
    let mut trace = TrainTrace::default();
    for epoch in 0..cfg.epochs {
        let epoch_cfg = cfg.for_epoch(epoch);
        let order = epoch_permutation(cfg.seed, epoch, train_set.len());
        let mut counters = Counters::default();
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<LabeledExample> = chunk
                .iter()
                .map(|&i| train_set.examples[i].clone())
                .collect();
            let mut rngs: Vec<RngStream> = chunk
                .iter()
                .map(|&i| example_stream(cfg.seed, epoch, i))
                .collect();
            let out = step_gradient(&model, &batch, &epoch_cfg, &mut rngs, &mut counters)?;
            apply(&mut model, &epoch_cfg, &out)?;
        }
        let (train_loss, train_acc) = evaluate(&model, &cfg.loss, train_set)?;
        let (test_loss, test_acc) = evaluate(&model, &cfg.loss, test_set)?;
        trace.records.push(EpochRecord {
            epoch,
            train_loss,
            test_loss,
            train_acc,
            test_acc,
            mean_input_grad_norm: mean_input_grad_norm(&model, &cfg.loss, train_set)?,
            forward_count: counters.forward,
            backward_count: counters.backward,
        });
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, DatasetSpec};
    use crate::models::{Activation, Label};

    fn setup() -> (Model, Dataset, Dataset) {
        let (tr, te) = generate(&DatasetSpec::halfspace(40, 20, 3, 1.0, 8)).unwrap();
        let model = Model::mlp(&[3, 5, 1], Activation::Tanh, &mut RngStream::new(1, 1)).unwrap();
        (model, tr, te)
    }

    #[test]
    fn erm_hinge_step_by_hand() {
        let mut model = Model::linear(vec![0.1, -0.2]);
        let e = LabeledExample::new(vec![1.0, 2.0], Label::Binary(1.0));
        let mut cfg = TrainConfig::new(Method::Erm, 1, 0.5, 1, 0);
        cfg.loss = Loss::hinge();
        cfg.weight_decay = 0.1;
        erm_step(&mut model, &[e], &cfg, &mut Counters::default()).unwrap();
        let expected = [
            0.1 - 0.5 * (-1.0 + 0.1 * 0.1),
            -0.2 - 0.5 * (-2.0 + 0.1 * -0.2),
        ];
        assert_eq!(model.flat_params(), expected);
    }

    #[test]
    fn zero_lr_and_empty_batch() {
        let (model, tr, _) = setup();
        let cfg = TrainConfig::new(Method::Maxup, 3, 0.0, 1, 0);
        let mut m2 = model.clone();
        let mut rngs = vec![RngStream::new(0, 0); 2];
        maxup_minibatch_step(
            &mut m2,
            &tr.examples[..2],
            &cfg,
            &mut rngs,
            &mut Counters::default(),
        )
        .unwrap();
        assert_eq!(m2, model);
        assert!(matches!(
            erm_step(&mut m2, &[], &cfg, &mut Counters::default()),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn counters_per_method() {
        let (model, tr, _) = setup();
        let batch = &tr.examples[..5];
        let mut cfg = TrainConfig::new(Method::Maxup, 4, 0.1, 1, 0);
        cfg.spec = AugmentationSpec::gaussian(0.2);
        let mut c = Counters::default();
        maxup_gradient(
            &model,
            batch,
            &cfg,
            &mut vec![RngStream::new(0, 0); 5],
            &mut c,
        )
        .unwrap();
        assert_eq!(
            c,
            Counters {
                forward: 20,
                backward: 5
            }
        );
        let mut c = Counters::default();
        avg_aug_gradient(
            &model,
            batch,
            &cfg,
            &mut vec![RngStream::new(0, 0); 5],
            &mut c,
        )
        .unwrap();
        assert_eq!(
            c,
            Counters {
                forward: 20,
                backward: 20
            }
        );
    }

    #[test]
    fn avg_aug_gradient_is_mean_of_copy_gradients() {
        let (model, tr, _) = setup();
        let e = &tr.examples[0];
        let mut cfg = TrainConfig::new(Method::AvgAug, 3, 0.1, 1, 0);
        cfg.spec = AugmentationSpec::gaussian(0.3);
        let rng = RngStream::new(5, 6);
        let out = avg_aug_gradient(
            &model,
            std::slice::from_ref(e),
            &cfg,
            &mut [rng.clone()],
            &mut Counters::default(),
        )
        .unwrap();
        let xs = crate::augment::sample(&cfg.spec, &e.x, 3, &mut rng.clone()).unwrap();
        let grads: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| param_gradient(&model, &cfg.loss, x, e.y).unwrap().1)
            .collect();
        for j in 0..grads[0].len() {
            let manual = (grads[0][j] + grads[1][j] + grads[2][j]) / 3.0;
            assert!((out.gradient[j] - manual).abs() < 1e-15);
        }
    }

    #[test]
    fn maxup_follows_the_worst_copy() {
        let (model, tr, _) = setup();
        let e = &tr.examples[3];
        let mut cfg = TrainConfig::new(Method::Maxup, 2, 0.1, 1, 0);
        cfg.spec = AugmentationSpec::gaussian(0.5);
        let rng = RngStream::new(9, 9);
        let out = maxup_gradient(
            &model,
            std::slice::from_ref(e),
            &cfg,
            &mut [rng.clone()],
            &mut Counters::default(),
        )
        .unwrap();
        let xs = crate::augment::sample(&cfg.spec, &e.x, 2, &mut rng.clone()).unwrap();
        let l: Vec<f64> = xs
            .iter()
            .map(|x| model.loss(&cfg.loss, x, e.y).unwrap())
            .collect();
        assert_ne!(l[0], l[1]);
        let worst = if l[1] > l[0] { 1 } else { 0 };
        assert_eq!(out.selected, vec![worst]);
        assert_eq!(
            out.gradient,
            param_gradient(&model, &cfg.loss, &xs[worst], e.y)
                .unwrap()
                .1
        );
        // scaling the loss keeps the argmax
        let scaled: Vec<f64> = l.iter().map(|v| 7.5 * v).collect();
        assert_eq!(argmax_lowest(&scaled).unwrap().0, worst);
    }

    #[test]
    fn ohem_picks_the_outlier() {
        let model = Model::linear(vec![1.0, 1.0]);
        let batch = vec![
            LabeledExample::new(vec![1.0, 1.0], Label::Binary(1.0)),
            LabeledExample::new(vec![3.0, 3.0], Label::Binary(-1.0)),
            LabeledExample::new(vec![0.5, 0.0], Label::Binary(1.0)),
        ];
        let mut cfg = TrainConfig::new(Method::Ohem, 1, 0.1, 1, 0);
        cfg.loss = Loss::hinge();
        let out = ohem_gradient(&model, &batch, &cfg, &mut Counters::default()).unwrap();
        assert_eq!(out.selected, vec![1]);
        assert_eq!(out.gradient, vec![3.0, 3.0]);
    }

    #[test]
    fn warmup_everything_equals_single_draw_augmentation() {
        let (model, tr, te) = setup();
        let mut cfg = TrainConfig::new(Method::Maxup, 4, 0.1, 2, 3);
        cfg.spec = AugmentationSpec::gaussian(0.3);
        cfg.warmup_epochs = 2;
        let a = train(&model, &tr, &te, &cfg).unwrap();
        let plain = TrainConfig {
            method: Method::AvgAug,
            m: 1,
            warmup_epochs: 0,
            ..cfg.clone()
        };
        let b = train(&model, &tr, &te, &plain).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.records.len(), 2);
    }

    #[test]
    fn train_is_deterministic_and_validates() {
        let (model, tr, te) = setup();
        let mut cfg = TrainConfig::new(Method::Maxup, 2, 0.1, 2, 3);
        cfg.spec = AugmentationSpec::gaussian(0.3);
        cfg.batch_size = 7;
        let a = train(&model, &tr, &te, &cfg).unwrap();
        assert_eq!(a, train(&model, &tr, &te, &cfg).unwrap());
        assert!(a.1.to_csv().lines().count() == 3);
        cfg.warmup_epochs = 5;
        assert!(
            matches!(train(&model, &tr, &te, &cfg), Err(Error::ConfigInvalid { key, .. }) if key == "warmup_epochs")
        );
    }
}
