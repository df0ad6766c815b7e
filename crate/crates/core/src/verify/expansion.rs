//! Small-perturbation expansions of the worst-case, average and adversarial losses.

use crate::error::{Error, Result};
use crate::math::stats::log_log_slope;
use crate::math::tensor::dot;
use crate::math::{monte_carlo, monte_carlo_vec, MeanEstimate, RngStream, Tensor};
use crate::models::{InputObjective, Label, Loss, Model, ModelObjective};

use super::{Status, VerificationReport};

/// How the residual is expected to behave as the scale shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Identically zero, e.g. for objectives linear in `x`.
    Vanishing,
    /// `Theta(scale^2)`.
    Quadratic,
}

/// Slope window around the quadratic order.
const SLOPE_WINDOW: (f64, f64) = (1.5, 2.5);
/// Absolute tolerance for residuals that should vanish up to rounding.
const ROUNDING_TOLERANCE: f64 = 1e-10;
/// Objective evaluations per inner maximization: two starts, 21 iterates each.
const PGA_EVALUATIONS: u64 = 42;
/// Kinks must sit further than this many perturbation scales from `x`.
const KINK_SCALES: f64 = 6.0;

#[derive(Debug, Clone)]
pub struct ExpansionProbe<O> {
    pub objective: O,
    pub x: Vec<f64>,
    /// Strictly decreasing perturbation scales.
    pub sigma_list: Vec<f64>,
    pub m: usize,
    pub mc_samples: usize,
    pub expect: Order,
}

impl ExpansionProbe<ModelObjective> {
    pub fn for_model(
        model: Model,
        loss: Loss,
        x: Tensor,
        y: Label,
        sigma_list: Vec<f64>,
        m: usize,
        mc_samples: usize,
    ) -> Result<Self> {
        let probe = Self {
            objective: ModelObjective::new(model, loss, y)?,
            x: x.into_data(),
            sigma_list,
            m,
            mc_samples,
            expect: Order::Quadratic,
        };
        probe.validate()?;
        Ok(probe)
    }
}

impl<O: InputObjective> ExpansionProbe<O> {
    pub fn new(
        objective: O,
        x: Vec<f64>,
        sigma_list: Vec<f64>,
        m: usize,
        mc_samples: usize,
        expect: Order,
    ) -> Result<Self> {
        let probe = Self {
            objective,
            x,
            sigma_list,
            m,
            mc_samples,
            expect,
        };
        probe.validate()?;
        Ok(probe)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.objective.dim() {
            return Err(Error::ShapeMismatch {
                op: "expansion probe",
                lhs: vec![self.objective.dim()],
                rhs: vec![self.x.len()],
            });
        }
        if self.sigma_list.is_empty()
            || self.sigma_list.iter().any(|&s| !(s > 0.0 && s.is_finite()))
            || self.sigma_list.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::BadSpec(
                "sigma_list must be positive and strictly decreasing".into(),
            ));
        }
        if self.m == 0 || self.mc_samples < 2 {
            return Err(Error::BadSpec(
                "need m >= 1 and at least two samples".into(),
            ));
        }
        check_kinks(&self.objective, &self.x, self.sigma_list[0])
    }
}

fn check_kinks<O: InputObjective>(objective: &O, x: &[f64], scale: f64) -> Result<()> {
    let required = KINK_SCALES * scale;
    match objective.kink_margin(x) {
        Some(margin) if margin < required => Err(Error::KinkProximity { margin, required }),
        _ => Ok(()),
    }
}

/// Residual of an expansion at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPoint {
    pub scale: f64,
    pub residual: f64,
    pub standard_error: f64,
    /// The first-order term that was subtracted (or, for averages, the curvature term).
    pub leading_term: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionOutcome {
    pub points: Vec<ResidualPoint>,
    pub slope: Option<f64>,
    pub report: VerificationReport,
}

impl ExpansionOutcome {
    /// `scale,residual,standard_error,leading_term` rows.
    pub fn to_csv_rows(&self, label: &str) -> Vec<String> {
        self.points
            .iter()
            .map(|p| {
                format!(
                    "{label},{:?},{:?},{:?},{:?}",
                    p.scale, p.residual, p.standard_error, p.leading_term
                )
            })
            .collect()
    }
}

fn judge_order(
    name: &str,
    points: &[ResidualPoint],
    expect: Order,
) -> (Option<f64>, VerificationReport) {
    let samples = points.iter().map(|p| p.samples).sum();
    match expect {
        Order::Vanishing => {
            let worst = points
                .iter()
                .max_by(|a, b| a.residual.abs().total_cmp(&b.residual.abs()))
                .expect("nonempty");
            let report = VerificationReport::new(
                format!("{name}/vanishing"),
                worst.residual,
                worst.standard_error,
                samples,
            )
            .with_oracle(0.0)
            .with_tolerance(ROUNDING_TOLERANCE)
            .judged();
            (None, report)
        }
        Order::Quadratic => {
            let xs: Vec<f64> = points.iter().map(|p| p.scale).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.residual).collect();
            let slope = log_log_slope(&xs, &ys);
            let weakest = points
                .iter()
                .map(|p| p.residual.abs() / p.standard_error.max(f64::MIN_POSITIVE))
                .fold(f64::INFINITY, f64::min);
            let report = match slope {
                Some(s) => VerificationReport::new(format!("{name}/slope"), s, 0.0, samples)
                    .with_oracle(2.0)
                    .with_tolerance(0.5)
                    .with_bounds(Some(SLOPE_WINDOW.0), Some(SLOPE_WINDOW.1))
                    .with_note(format!("smallest residual/std_err ratio {weakest:.1}"))
                    .judged(),
                None => VerificationReport::new(format!("{name}/slope"), f64::NAN, 0.0, samples)
                    .with_status(Status::Inconclusive)
                    .with_note("a residual was exactly zero"),
            };
            (slope, report)
        }
    }
}

fn unit_or_first_axis(g: &[f64]) -> (Vec<f64>, f64) {
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        (g.iter().map(|v| v / n).collect(), n)
    } else {
        let mut e = vec![0.0; g.len()];
        e[0] = 1.0;
        (e, 0.0)
    }
}

/// Residual `E[max_i L(x + sigma z_i)] - L(x) - c_{m,sigma} ||grad L||` at each sigma.
///
/// The same draws serve every sigma. On each draw the linear term
/// `max_i sigma <g, z_i>` is subtracted sample by sample; its mean is the
/// matched Monte-Carlo estimate of `c_{m,sigma} ||g||`, so the residual
/// estimator has variance of order `sigma^4` rather than `sigma^2`.
pub fn verify_maxup_expansion<O: InputObjective>(
    probe: &ExpansionProbe<O>,
    rng: &RngStream,
) -> Result<ExpansionOutcome> {
    probe.validate()?;
    let x = &probe.x;
    let d = x.len();
    let base = probe.objective.value(x);
    let (dir, gnorm) = unit_or_first_axis(&probe.objective.gradient(x));
    let mut points = Vec::with_capacity(probe.sigma_list.len());
    for &sigma in &probe.sigma_list {
        let est = monte_carlo_vec(
            probe.mc_samples,
            2,
            rng.seed(),
            rng.stream_id(),
            |r, out| {
                let mut z = vec![0.0; d];
                let mut xp = vec![0.0; d];
                let mut worst = f64::NEG_INFINITY;
                let mut lin = f64::NEG_INFINITY;
                for _ in 0..probe.m {
                    r.fill_standard_normal(&mut z);
                    for ((p, xi), zi) in xp.iter_mut().zip(x).zip(&z) {
                        *p = xi + sigma * zi;
                    }
                    worst = worst.max(probe.objective.value(&xp));
                    lin = lin.max(sigma * dot(&dir, &z));
                }
                out[0] = (worst - base) - gnorm * lin;
                out[1] = lin;
            },
        );
        points.push(ResidualPoint {
            scale: sigma,
            residual: est[0].mean,
            standard_error: est[0].standard_error,
            leading_term: est[1].mean * gnorm,
            samples: est[0].samples as u64,
        });
    }
    let (slope, report) = judge_order("maxup_expansion", &points, probe.expect);
    Ok(ExpansionOutcome {
        points,
        slope,
        report,
    })
}

/// `(E[L(x + sigma z)] - L(x)) / sigma^2` against `trace(Hessian) / 2`.
///
/// Uses the antithetic pair `(L(x + sigma z) + L(x - sigma z)) / 2`, whose
/// first-order terms cancel exactly. The comparison is made at the smallest
/// sigma; every sigma contributes a point whose residual is the remainder
/// after subtracting `sigma^2 trace / 2`.
pub fn verify_avg_aug_expansion<O: InputObjective>(
    probe: &ExpansionProbe<O>,
    fd_step: f64,
    rng: &RngStream,
) -> Result<ExpansionOutcome> {
    probe.validate()?;
    let x = &probe.x;
    let d = x.len();
    let base = probe.objective.value(x);
    let half_trace = 0.5 * hessian_trace_fd(&probe.objective, x, fd_step)?;
    let mut points = Vec::with_capacity(probe.sigma_list.len());
    let mut last = MeanEstimate {
        mean: f64::NAN,
        standard_error: 0.0,
        samples: 0,
    };
    for &sigma in &probe.sigma_list {
        let est = monte_carlo(probe.mc_samples, rng.seed(), rng.stream_id(), |r| {
            let mut z = vec![0.0; d];
            r.fill_standard_normal(&mut z);
            let plus: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + sigma * b).collect();
            let minus: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - sigma * b).collect();
            let pair = 0.5 * (probe.objective.value(&plus) + probe.objective.value(&minus));
            (pair - base) / (sigma * sigma)
        });
        points.push(ResidualPoint {
            scale: sigma,
            residual: sigma * sigma * (est.mean - half_trace),
            standard_error: sigma * sigma * est.standard_error,
            leading_term: sigma * sigma * half_trace,
            samples: est.samples as u64,
        });
        last = est;
    }
    let sigma = *probe.sigma_list.last().expect("nonempty");
    let report = VerificationReport::new(
        format!("avgaug_expansion/sigma={sigma}"),
        last.mean,
        last.standard_error,
        points.iter().map(|p| p.samples).sum(),
    )
    .with_oracle(half_trace)
    .with_tolerance(4.0 * last.standard_error + 1e-3)
    .with_note("curvature coefficient is trace/2: the second Gaussian moment contributes sigma^2/2, not sigma^2")
    .judged();
    Ok(ExpansionOutcome {
        points,
        slope: None,
        report,
    })
}

/// `sum_j (dL/dx_j(x + h e_j) - dL/dx_j(x - h e_j)) / 2h`.
pub fn hessian_trace_fd<O: InputObjective + ?Sized>(
    objective: &O,
    x: &[f64],
    h: f64,
) -> Result<f64> {
    if let Some(margin) = objective.kink_margin(x) {
        let required = (10.0 * h).max(1e-3);
        if margin < required {
            return Err(Error::KinkProximity { margin, required });
        }
    }
    let mut xp = x.to_vec();
    let mut total = 0.0;
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let up = objective.gradient(&xp)[j];
        xp[j] = x[j] - h;
        let down = objective.gradient(&xp)[j];
        xp[j] = x[j];
        total += (up - down) / (2.0 * h);
    }
    Ok(total)
}

/// Randomized trace estimate `E[v^T H v]` over Rademacher `v`, with `Hv` by central differences.
pub fn hutchinson_trace<O: InputObjective>(
    objective: &O,
    x: &[f64],
    probes: usize,
    h: f64,
    rng: &RngStream,
) -> MeanEstimate {
    monte_carlo(probes, rng.seed(), rng.stream_id(), |r| {
        let v: Vec<f64> = (0..x.len()).map(|_| r.sign()).collect();
        let plus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let gp = objective.gradient(&plus);
        let gm = objective.gradient(&minus);
        v.iter()
            .zip(gp.iter().zip(&gm))
            .map(|(vi, (a, b))| vi * (a - b))
            .sum::<f64>()
            / (2.0 * h)
    })
}

/// `||g||_q` for `q` in `[1, inf]`.
pub fn dual_norm(g: &[f64], q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::BadExponent(q));
    }
    let abs = g.iter().map(|v| v.abs());
    Ok(if q == f64::INFINITY {
        abs.fold(0.0, f64::max)
    } else if q == 1.0 {
        abs.sum()
    } else if q == 2.0 {
        g.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        let top = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if top == 0.0 {
            0.0
        } else {
            top * abs.map(|v| (v / top).powf(q)).sum::<f64>().powf(1.0 / q)
        }
    })
}

/// `q` with `1/p + 1/q = 1`.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        Err(Error::BadExponent(p))
    } else if p == 1.0 {
        Ok(f64::INFINITY)
    } else if p == f64::INFINITY {
        Ok(1.0)
    } else {
        Ok(p / (p - 1.0))
    }
}

/// The maximizer of `<g, delta>` over the radius-`r` `l_p` ball.
pub fn first_order_direction(g: &[f64], p: f64, r: f64) -> Result<Vec<f64>> {
    let q = conjugate_exponent(p)?;
    let gq = dual_norm(g, q)?;
    if gq == 0.0 {
        return Ok(vec![0.0; g.len()]);
    }
    Ok(if p == f64::INFINITY {
        g.iter().map(|v| r * sign(*v)).collect()
    } else if p == 1.0 {
        let j = g.iter().enumerate().fold(
            0,
            |best, (i, v)| if v.abs() > g[best].abs() { i } else { best },
        );
        let mut e = vec![0.0; g.len()];
        e[j] = r * sign(g[j]);
        e
    } else {
        g.iter()
            .map(|v| r * sign(*v) * (v.abs() / gq).powf(q - 1.0))
            .collect()
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn project(delta: &mut [f64], p: f64, r: f64) {
    if p == f64::INFINITY {
        for v in delta.iter_mut() {
            *v = v.clamp(-r, r);
        }
    } else if p == 2.0 {
        let n = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > r {
            for v in delta.iter_mut() {
                *v *= r / n;
            }
        }
    } else {
        project_l1(delta, r);
    }
}

/// Euclidean projection onto the `l_1` ball (sort and threshold).
fn project_l1(delta: &mut [f64], r: f64) {
    if delta.iter().map(|v| v.abs()).sum::<f64>() <= r {
        return;
    }
    let mut mags: Vec<f64> = delta.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in mags.iter().enumerate() {
        cum += u;
        let t = (cum - r) / (k + 1) as f64;
        if u > t {
            theta = t;
        }
    }
    for v in delta.iter_mut() {
        *v = sign(*v) * (v.abs() - theta).max(0.0);
    }
}

/// `max_{||delta||_p <= r} L(x + delta)` by projected gradient ascent.
///
/// Two starts, the first-order maximizer and zero; 20 steps of length `r/10`
/// each (sign steps for `p = inf`, normalized gradient steps otherwise). The
/// best value seen is returned with its perturbation.
pub fn pga_inner_max<O: InputObjective + ?Sized>(
    objective: &O,
    x: &[f64],
    p: f64,
    r: f64,
) -> Result<(f64, Vec<f64>)> {
    if !(p == 1.0 || p == 2.0 || p == f64::INFINITY) {
        return Err(Error::BadExponent(p));
    }
    let step = r / 10.0;
    let g = objective.gradient(x);
    let at = |delta: &[f64]| {
        let xp: Vec<f64> = x.iter().zip(delta).map(|(a, b)| a + b).collect();
        xp
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; x.len()]);
    for start in [first_order_direction(&g, p, r)?, vec![0.0; x.len()]] {
        let mut delta = start;
        for it in 0..=20 {
            let xp = at(&delta);
            let value = objective.value(&xp);
            if value > best.0 {
                best = (value, delta.clone());
            }
            if it == 20 {
                break;
            }
            let mut grad = objective.gradient(&xp);
            if grad.iter().all(|&v| v == 0.0) {
                // stationary point: leave it along the first axis
                grad[0] = 1.0;
            }
            if p == f64::INFINITY {
                for (dv, gv) in delta.iter_mut().zip(&grad) {
                    *dv += step * sign(*gv);
                }
            } else {
                let n = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (dv, gv) in delta.iter_mut().zip(&grad) {
                    *dv += step * gv / n;
                }
            }
            project(&mut delta, p, r);
        }
    }
    Ok(best)
}

/// Residual `max_{||delta||_p <= r} L(x + delta) - L(x) - r ||grad L||_q` at each radius.
pub fn verify_adversarial_expansion<O: InputObjective + ?Sized>(
    objective: &O,
    x: &[f64],
    p: f64,
    r_list: &[f64],
    expect: Order,
) -> Result<ExpansionOutcome> {
    if r_list.is_empty()
        || r_list.iter().any(|&r| !(r > 0.0))
        || r_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::BadSpec(
            "r_list must be positive and strictly decreasing".into(),
        ));
    }
    if let Some(margin) = objective.kink_margin(x) {
        let required = KINK_SCALES * r_list[0] * (x.len() as f64).sqrt();
        if margin < required {
            return Err(Error::KinkProximity { margin, required });
        }
    }
    let q = conjugate_exponent(p)?;
    let base = objective.value(x);
    let gq = dual_norm(&objective.gradient(x), q)?;
    let mut points = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let (value, _) = pga_inner_max(objective, x, p, r)?;
        points.push(ResidualPoint {
            scale: r,
            residual: (value - base) - r * gq,
            standard_error: 0.0,
            leading_term: r * gq,
            samples: PGA_EVALUATIONS,
        });
    }
    let name = if p == f64::INFINITY {
        "adversarial_expansion/p=inf".to_string()
    } else {
        format!("adversarial_expansion/p={p}")
    };
    let (slope, report) = judge_order(&name, &points, expect);
    Ok(ExpansionOutcome {
        points,
        slope,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Activation, LinearObjective, QuadraticBowl};

    fn tanh_objective(seed: u64) -> (ModelObjective, Vec<f64>) {
        let mut rng = RngStream::new(seed, 17);
        let model = Model::mlp(&[4, 8, 1], Activation::Tanh, &mut rng).unwrap();
        let x: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
        (
            ModelObjective::new(model, Loss::logistic(), Label::Binary(1.0)).unwrap(),
            x,
        )
    }

    #[test]
    fn dual_norm_identities() {
        assert_eq!(dual_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert_eq!(dual_norm(&[3.0, -4.0], 1.0).unwrap(), 7.0);
        assert_eq!(dual_norm(&[3.0, -4.0], f64::INFINITY).unwrap(), 4.0);
        assert!((dual_norm(&[3.0, -4.0], 3.0).unwrap() - 91f64.cbrt()).abs() < 1e-12);
        assert!(matches!(dual_norm(&[1.0], 0.5), Err(Error::BadExponent(_))));
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
    }

    #[test]
    fn first_order_point_attains_the_dual_norm() {
        let g = [0.3, -1.2, 0.5];
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let q = conjugate_exponent(p).unwrap();
            let d = first_order_direction(&g, p, 0.5).unwrap();
            assert!((dot(&g, &d) - 0.5 * dual_norm(&g, q).unwrap()).abs() < 1e-12);
            assert!(dual_norm(&d, p).unwrap() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn l1_projection() {
        let mut v = vec![3.0, -1.0, 0.5];
        project_l1(&mut v, 2.0);
        assert!((v.iter().map(|a: &f64| a.abs()).sum::<f64>() - 2.0).abs() < 1e-12);
        assert_eq!(v, vec![2.0, -0.0, 0.0]);
    }

    #[test]
    fn fd_trace_on_simple_objectives() {
        let bowl = QuadraticBowl { dim: 6 };
        assert!((hessian_trace_fd(&bowl, &[0.3; 6], 1e-4).unwrap() - 6.0).abs() < 1e-8);
        let lin = LinearObjective {
            g: vec![1.0, -2.0],
            c: 0.0,
        };
        assert!(hessian_trace_fd(&lin, &[0.1, 0.2], 1e-4).unwrap().abs() < 1e-8);
    }

    #[test]
    fn fd_trace_matches_hutchinson() {
        let (obj, x) = tanh_objective(2);
        let fd = hessian_trace_fd(&obj, &x, 1e-4).unwrap();
        let hut = hutchinson_trace(&obj, &x, 100_000, 1e-4, &RngStream::new(1, 2));
        assert!(
            (fd - hut.mean).abs() <= 4.0 * hut.standard_error + 1e-7,
            "{fd} vs {hut:?}"
        );
    }

    #[test]
    fn linear_objective_has_vanishing_residuals() {
        let lin = LinearObjective {
            g: vec![0.5, -1.0, 2.0],
            c: 0.25,
        };
        let probe = ExpansionProbe::new(
            lin.clone(),
            vec![0.1, 0.2, 0.3],
            vec![0.1, 0.05],
            4,
            20_000,
            Order::Vanishing,
        )
        .unwrap();
        let out = verify_maxup_expansion(&probe, &RngStream::new(0, 1)).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        let avg = verify_avg_aug_expansion(&probe, 1e-4, &RngStream::new(0, 2)).unwrap();
        assert!(avg.report.passed(), "{:?}", avg.report);
        for p in [1.0, 2.0, f64::INFINITY] {
            let adv =
                verify_adversarial_expansion(&lin, &probe.x, p, &[0.1, 0.05], Order::Vanishing)
                    .unwrap();
            assert!(adv.report.passed(), "{:?}", adv.report);
        }
    }

    #[test]
    fn bowl_at_origin_grows_quadratically() {
        let bowl = QuadraticBowl { dim: 3 };
        let probe = ExpansionProbe::new(
            bowl,
            vec![0.0; 3],
            vec![0.2, 0.1, 0.05],
            3,
            20_000,
            Order::Quadratic,
        )
        .unwrap();
        let out = verify_maxup_expansion(&probe, &RngStream::new(5, 1)).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        let avg = verify_avg_aug_expansion(&probe, 1e-4, &RngStream::new(5, 2)).unwrap();
        assert!(avg.report.passed());
        assert!((avg.report.oracle.unwrap() - 1.5).abs() < 1e-8);
        let adv =
            verify_adversarial_expansion(&bowl, &probe.x, 2.0, &[0.2, 0.1, 0.05], Order::Quadratic)
                .unwrap();
        assert!((adv.slope.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn tanh_probe_slopes() {
        let (obj, x) = tanh_objective(4);
        let probe = ExpansionProbe::new(
            obj.clone(),
            x.clone(),
            vec![0.05, 0.025, 0.0125],
            4,
            50_000,
            Order::Quadratic,
        )
        .unwrap();
        let out = verify_maxup_expansion(&probe, &RngStream::new(3, 3)).unwrap();
        assert!(out.report.passed(), "{:?} {:?}", out.report, out.points);
        let adv = verify_adversarial_expansion(
            &obj,
            &x,
            f64::INFINITY,
            &[0.02, 0.01, 0.005],
            Order::Quadratic,
        )
        .unwrap();
        assert!(adv.report.passed(), "{:?}", adv.points);
    }

    #[test]
    fn rejects_bad_probes() {
        let bowl = QuadraticBowl { dim: 2 };
        assert!(
            ExpansionProbe::new(bowl, vec![0.0; 2], vec![0.1, 0.2], 2, 10, Order::Quadratic)
                .is_err()
        );
        let relu = Model::linear(vec![1.0, 0.0]);
        let obj = ModelObjective::new(relu, Loss::hinge(), Label::Binary(1.0)).unwrap();
        let res = ExpansionProbe::new(obj, vec![1.01, 0.0], vec![0.05], 2, 10, Order::Quadratic);
        assert!(matches!(res, Err(Error::KinkProximity { .. })));
    }
}
