//! Named check selections with fixed default parameters.

use crate::data::{generate, mean_difference_direction, DatasetSpec};
use crate::error::{Error, Result};
use crate::math::tensor::norm2;
use crate::math::RngStream;
use crate::models::{
    Activation, Label, LinearObjective, Loss, LossKind, Model, ModelObjective, QuadraticBowl,
};

use super::constants::{compute_g, estimate_c_m_sigma, lemma1_band_report, verify_c_monotone};
use super::expansion::{
    dual_norm, verify_adversarial_expansion, verify_avg_aug_expansion, verify_maxup_expansion,
    ExpansionProbe, Order,
};
use super::linear::{
    closed_form_worst_case_01, empirical_rademacher, gap_experiment, verify_worst_case_01, GapTable,
};
use super::{Status, VerificationReport};

pub const DEFAULT_SAMPLES: usize = 1_000_000;

pub const CHECK_NAMES: [&str; 9] = [
    "lemma1_band",
    "maxup_expansion",
    "avgaug_expansion",
    "adversarial_expansion",
    "dual_norm",
    "G_coherence",
    "rademacher",
    "worst_case_01",
    "gap_experiment",
];

pub const EXPANSION_SIGMAS: [f64; 3] = [0.05, 0.025, 0.0125];
pub const ADVERSARIAL_RADII: [f64; 3] = [0.02, 0.01, 0.005];
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Monte-Carlo draws per estimate.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckOutput {
    pub reports: Vec<VerificationReport>,
    /// `probe,scale,residual,standard_error,leading_term` rows from expansion checks.
    pub residual_rows: Vec<String>,
    pub gap_table: Option<GapTable>,
}

impl CheckOutput {
    fn extend(&mut self, other: CheckOutput) {
        self.reports.extend(other.reports);
        self.residual_rows.extend(other.residual_rows);
        if other.gap_table.is_some() {
            self.gap_table = other.gap_table;
        }
    }
}

/// `count` tanh networks `8 -> 16 -> 16 -> 1` under logistic loss, each with a
/// standard normal input and a uniformly random label.
pub fn random_tanh_probes(count: usize, seed: u64) -> Result<Vec<(ModelObjective, Vec<f64>)>> {
    (0..count)
        .map(|i| {
            let mut rng = RngStream::derived(seed, &[0x7a4, i as u64]);
            let model = Model::mlp(&[8, 16, 16, 1], Activation::Tanh, &mut rng)?;
            let mut x = vec![0.0; 8];
            rng.fill_standard_normal(&mut x);
            let y = rng.sign();
            Ok((
                ModelObjective::new(model, Loss::logistic(), Label::Binary(y))?,
                x,
            ))
        })
        .collect()
}

fn stream(opts: &VerifyOptions, tag: u64) -> RngStream {
    RngStream::derived(opts.seed, &[0x5e1f, tag])
}

fn lemma1_band(opts: &VerifyOptions) -> Result<CheckOutput> {
    let mut reports = Vec::new();
    for (si, sigma) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        for k in 1..=7 {
            let m = 1usize << k;
            reports.push(lemma1_band_report(
                m,
                sigma,
                opts.samples,
                &stream(opts, 100 + 10 * si as u64 + k),
            ));
        }
    }
    for m in [2, 8, 32] {
        reports.push(verify_c_monotone(
            m,
            1.0,
            opts.samples / 4,
            &stream(opts, 200 + m as u64),
        ));
    }
    Ok(CheckOutput {
        reports,
        ..Default::default()
    })
}

fn linear_probe() -> (LinearObjective, Vec<f64>) {
    (
        LinearObjective {
            g: vec![0.5, -1.0, 0.25, 2.0, 0.0, -0.75, 1.5, 0.1],
            c: 0.3,
        },
        vec![0.2, -0.1, 0.4, 0.0, 1.0, -2.0, 0.5, 0.3],
    )
}

fn maxup_expansion(opts: &VerifyOptions) -> Result<CheckOutput> {
    let mut out = CheckOutput::default();
    for (i, (obj, x)) in random_tanh_probes(5, opts.seed)?.into_iter().enumerate() {
        let probe = ExpansionProbe::new(
            obj,
            x,
            EXPANSION_SIGMAS.to_vec(),
            4,
            opts.samples,
            Order::Quadratic,
        )?;
        let mut outcome = verify_maxup_expansion(&probe, &stream(opts, 300 + i as u64))?;
        outcome.report.check_name = format!("{}/tanh{i}", outcome.report.check_name);
        out.residual_rows
            .extend(outcome.to_csv_rows(&format!("maxup/tanh{i}")));
        out.reports.push(outcome.report);
    }
    let (obj, x) = linear_probe();
    let probe = ExpansionProbe::new(
        obj,
        x,
        EXPANSION_SIGMAS.to_vec(),
        4,
        opts.samples / 10,
        Order::Vanishing,
    )?;
    let outcome = verify_maxup_expansion(&probe, &stream(opts, 310))?;
    out.residual_rows
        .extend(outcome.to_csv_rows("maxup/linear"));
    out.reports.push(outcome.report.clone());
    Ok(out)
}

fn avgaug_expansion(opts: &VerifyOptions) -> Result<CheckOutput> {
    let mut out = CheckOutput::default();
    for (i, (obj, x)) in random_tanh_probes(5, opts.seed)?.into_iter().enumerate() {
        let probe = ExpansionProbe::new(
            obj,
            x,
            EXPANSION_SIGMAS.to_vec(),
            1,
            opts.samples,
            Order::Quadratic,
        )?;
        let mut outcome = verify_avg_aug_expansion(&probe, FD_STEP, &stream(opts, 400 + i as u64))?;
        outcome.report.check_name = format!("{}/tanh{i}", outcome.report.check_name);
        out.residual_rows
            .extend(outcome.to_csv_rows(&format!("avgaug/tanh{i}")));
        out.reports.push(outcome.report);
    }
    let bowl = QuadraticBowl { dim: 8 };
    let probe = ExpansionProbe::new(
        bowl,
        vec![0.5; 8],
        EXPANSION_SIGMAS.to_vec(),
        1,
        opts.samples,
        Order::Quadratic,
    )?;
    let mut outcome = verify_avg_aug_expansion(&probe, FD_STEP, &stream(opts, 410))?;
    outcome.report.check_name = format!("{}/bowl", outcome.report.check_name);
    out.residual_rows.extend(outcome.to_csv_rows("avgaug/bowl"));
    out.reports.push(outcome.report);
    Ok(out)
}

fn adversarial_expansion(opts: &VerifyOptions) -> Result<CheckOutput> {
    let mut out = CheckOutput::default();
    let probes = random_tanh_probes(5, opts.seed)?;
    for p in [2.0, f64::INFINITY] {
        for (i, (obj, x)) in probes.iter().enumerate() {
            let mut outcome =
                verify_adversarial_expansion(obj, x, p, &ADVERSARIAL_RADII, Order::Quadratic)?;
            outcome.report.check_name = format!("{}/tanh{i}", outcome.report.check_name);
            out.residual_rows
                .extend(outcome.to_csv_rows(&format!("adversarial/p={p}/tanh{i}")));
            out.reports.push(outcome.report);
        }
        let (obj, x) = linear_probe();
        let mut outcome =
            verify_adversarial_expansion(&obj, &x, p, &ADVERSARIAL_RADII, Order::Vanishing)?;
        outcome.report.check_name = format!("{}/linear", outcome.report.check_name);
        out.reports.push(outcome.report);
    }
    Ok(out)
}

fn dual_norm_check() -> Result<CheckOutput> {
    let cases: [(&[f64], f64, f64); 6] = [
        (&[3.0, 4.0], 2.0, 5.0),
        (&[3.0, -4.0], 1.0, 7.0),
        (&[3.0, -4.0], f64::INFINITY, 4.0),
        (&[-6.0, 8.0], 2.0, 10.0),
        (&[0.0, 0.0, -2.5], 1.0, 2.5),
        (&[1.0, -1.0, 1.0, -1.0], f64::INFINITY, 1.0),
    ];
    let reports = cases
        .iter()
        .map(|&(g, q, expected)| {
            let v = dual_norm(g, q)?;
            Ok(
                VerificationReport::new(format!("dual_norm/{g:?}/q={q}"), v, 0.0, 0)
                    .with_oracle(expected)
                    .judged(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckOutput {
        reports,
        ..Default::default()
    })
}

fn g_coherence(opts: &VerifyOptions) -> Result<CheckOutput> {
    let mut reports = Vec::new();
    for (i, (q, r, s)) in [
        (2, 1.0, 1.0),
        (3, 2.0, 0.5),
        (5, 1.0, 1.0),
        (10, 0.5, 2.0),
        (40, 1.0, 0.3),
    ]
    .into_iter()
    .enumerate()
    {
        let g = compute_g(q, r, s)?;
        let c = estimate_c_m_sigma(q, r * s, opts.samples, &stream(opts, 500 + i as u64));
        reports.push(
            VerificationReport::new(
                format!("G_coherence/q={q}/R={r}/sigma_xi={s}"),
                c.mean,
                c.standard_error,
                c.samples as u64,
            )
            .with_oracle(g)
            .judged(),
        );
    }
    Ok(CheckOutput {
        reports,
        ..Default::default()
    })
}

/// 20 halfspace datasets `n = 200, d = 10` spread over `sigma_xi in {0.5, 1}` and `q in {2, 5}`.
fn rademacher(opts: &VerifyOptions) -> Result<CheckOutput> {
    let draws = (opts.samples / 100).max(1000);
    let mut reports = Vec::new();
    for i in 0..20u64 {
        let sigma_xi = if i % 2 == 0 { 0.5 } else { 1.0 };
        let q = if (i / 2) % 2 == 0 { 2 } else { 5 };
        let (train, _) = generate(&DatasetSpec::halfspace(
            200,
            0,
            10,
            1.0,
            opts.seed.wrapping_add(1000 + i),
        ))?;
        let est = empirical_rademacher(&train, 1.0, q, sigma_xi, draws, &stream(opts, 600 + i))?;
        reports.push(est.report);
    }
    let (train, _) = generate(&DatasetSpec::halfspace(
        200,
        0,
        10,
        1.0,
        opts.seed.wrapping_add(1020),
    ))?;
    let est = empirical_rademacher(&train, 1.0, 1, 1.0, draws, &stream(opts, 620))?;
    let exact = est.rn_f == est.rn_f_tilde;
    reports.push(
        VerificationReport::new(
            "rademacher/q=1/equality",
            est.difference.mean,
            0.0,
            est.difference.samples as u64,
        )
        .with_oracle(0.0)
        .with_status(if exact { Status::Pass } else { Status::Fail })
        .with_note("q = 1 must give identical estimates"),
    );
    Ok(CheckOutput {
        reports,
        ..Default::default()
    })
}

/// 20 random `(theta, dataset, q)` triples plus the zero-margin case.
fn worst_case_01(opts: &VerifyOptions) -> Result<CheckOutput> {
    let mut reports = Vec::new();
    let n = 10;
    let per_example = (opts.samples / n).max(100);
    for i in 0..20u64 {
        let mut rng = stream(opts, 700 + i);
        let d = 2 + rng.below(5);
        let q = 1 + rng.below(5);
        let sigma_xi = rng.uniform_range(0.3, 2.0);
        let mut theta = vec![0.0; d];
        rng.fill_standard_normal(&mut theta);
        let (data, _) = generate(&DatasetSpec::halfspace(
            n,
            0,
            d,
            1.0,
            opts.seed.wrapping_add(2000 + i),
        ))?;
        reports.push(verify_worst_case_01(
            &theta,
            &data,
            q,
            sigma_xi,
            per_example,
            &rng.child(1),
        )?);
    }
    let data = crate::data::Dataset::new(vec![
        crate::models::LabeledExample::new(vec![0.0, 1.0], Label::Binary(1.0)),
        crate::models::LabeledExample::new(vec![0.0, -2.0], Label::Binary(-1.0)),
    ]);
    for q in 1..=5 {
        let v = closed_form_worst_case_01(&[1.0, 0.0], &data, q, 1.0)?;
        reports.push(
            VerificationReport::new(format!("worst_case_01/zero_margin/q={q}"), v, 0.0, 0)
                .with_oracle(1.0 - 0.5f64.powi(q as i32))
                .judged(),
        );
    }
    Ok(CheckOutput {
        reports,
        ..Default::default()
    })
}

/// Halfspace `n = 200, d = 5` with a 20000-point population proxy; the classifier is
/// the unit mean-difference direction; loss `max(-s, 0)` clipped at 4.
fn gap(opts: &VerifyOptions) -> Result<CheckOutput> {
    let (train, test) = generate(&DatasetSpec::halfspace(
        200,
        20_000,
        5,
        1.0,
        opts.seed.wrapping_add(3000),
    ))?;
    let mut theta = mean_difference_direction(&train)?;
    let n = norm2(&theta);
    theta.iter_mut().for_each(|t| *t /= n);
    let draws = (opts.samples / 200).max(100);
    let table = gap_experiment(
        &train,
        &test,
        &theta,
        &[1, 2, 3, 4, 5],
        Loss::clipped(LossKind::DraftHinge, 4.0),
        1.0,
        1.0,
        1.0,
        (draws, (draws / 100).max(10)),
        &stream(opts, 800),
    )?;
    Ok(CheckOutput {
        reports: table.reports(),
        residual_rows: Vec::new(),
        gap_table: Some(table),
    })
}

pub fn run_check(name: &str, opts: &VerifyOptions) -> Result<CheckOutput> {
    match name {
        "lemma1_band" => lemma1_band(opts),
        "maxup_expansion" => maxup_expansion(opts),
        "avgaug_expansion" => avgaug_expansion(opts),
        "adversarial_expansion" => adversarial_expansion(opts),
        "dual_norm" => dual_norm_check(),
        "G_coherence" => g_coherence(opts),
        "rademacher" => rademacher(opts),
        "worst_case_01" => worst_case_01(opts),
        "gap_experiment" => gap(opts),
        other => Err(Error::BadSpec(format!(
            "unknown check `{other}`; valid checks: {}",
            CHECK_NAMES.join(", ")
        ))),
    }
}

/// Runs every named check in the order given; names are validated before any work starts.
pub fn run_checks(names: &[&str], opts: &VerifyOptions) -> Result<CheckOutput> {
    if let Some(bad) = names.iter().find(|n| !CHECK_NAMES.contains(n)) {
        return Err(Error::BadSpec(format!(
            "unknown check `{bad}`; valid checks: {}",
            CHECK_NAMES.join(", ")
        )));
    }
    let mut out = CheckOutput::default();
    for name in names {
        out.extend(run_check(name, opts)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_norm_check_passes() {
        let out = run_check("dual_norm", &VerifyOptions::default()).unwrap();
        assert!(out.reports.iter().all(|r| r.passed()));
    }

    #[test]
    fn unknown_name_lists_valid_ones() {
        let err = run_checks(&["dual_norm", "bogus"], &VerifyOptions::default()).unwrap_err();
        assert!(err.to_string().contains("G_coherence"));
    }

    #[test]
    fn small_runs_pass() {
        let opts = VerifyOptions {
            samples: 20_000,
            seed: 5,
        };
        for name in ["G_coherence", "worst_case_01", "gap_experiment"] {
            let out = run_check(name, &opts).unwrap();
            for r in &out.reports {
                assert!(r.passed(), "{r:?}");
            }
        }
    }

    #[test]
    fn probes_are_deterministic() {
        let a = random_tanh_probes(2, 1).unwrap();
        let b = random_tanh_probes(2, 1).unwrap();
        assert_eq!(a[1].1, b[1].1);
        assert_eq!(a[1].0.model.flat_params(), b[1].0.model.flat_params());
    }
}
