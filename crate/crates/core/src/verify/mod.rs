//! Numerical checks of the analytic results, each against an independent oracle.
//!
//! Every check produces [`VerificationReport`]s. A report passes when the
//! estimate sits within `max(4 * standard_error, tolerance)` of its oracle and
//! inside its bounds (with the same four-standard-error slack).

mod constants;
mod expansion;
mod linear;
mod suite;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use constants::{
    compute_g, estimate_c_m_sigma, expected_max_standard, lemma1_band_report, verify_c_monotone,
    verify_max_inner_product,
};
pub use expansion::{
    conjugate_exponent, dual_norm, first_order_direction, hessian_trace_fd, hutchinson_trace,
    pga_inner_max, verify_adversarial_expansion, verify_avg_aug_expansion, verify_maxup_expansion,
    ExpansionOutcome, ExpansionProbe, Order, ResidualPoint,
};
pub use linear::{
    closed_form_worst_case_01, empirical_rademacher, gap_experiment, verify_worst_case_01,
    worst_case_01_monte_carlo, GapRow, GapTable, RademacherEstimate,
};
pub use suite::{
    random_tanh_probes, run_check, run_checks, CheckOutput, VerifyOptions, CHECK_NAMES,
    DEFAULT_SAMPLES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub estimate: f64,
    pub oracle: Option<f64>,
    pub standard_error: f64,
    pub tolerance: f64,
    pub bound_low: Option<f64>,
    pub bound_high: Option<f64>,
    pub status: Status,
    pub samples_used: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl VerificationReport {
    /// An unjudged report; call [`judged`](Self::judged) once oracle and bounds are set.
    pub fn new(
        check_name: impl Into<String>,
        estimate: f64,
        standard_error: f64,
        samples_used: u64,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            estimate,
            oracle: None,
            standard_error,
            tolerance: 0.0,
            bound_low: None,
            bound_high: None,
            status: Status::Inconclusive,
            samples_used,
            note: String::new(),
        }
    }

    pub fn with_oracle(mut self, oracle: f64) -> Self {
        self.oracle = Some(oracle);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_bounds(mut self, low: Option<f64>, high: Option<f64>) -> Self {
        self.bound_low = low;
        self.bound_high = high;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn slack(&self) -> f64 {
        (4.0 * self.standard_error).max(self.tolerance)
    }

    /// Set the status from oracle and bounds.
    pub fn judged(mut self) -> Self {
        let slack = self.slack();
        let finite = self.estimate.is_finite() && self.oracle.is_none_or(f64::is_finite);
        let near = self
            .oracle
            .is_none_or(|o| (self.estimate - o).abs() <= slack);
        let above = self.bound_low.is_none_or(|lo| self.estimate >= lo - slack);
        let below = self.bound_high.is_none_or(|hi| self.estimate <= hi + slack);
        self.status = if finite && near && above && below {
            Status::Pass
        } else {
            Status::Fail
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// One JSON object per line.
pub fn to_jsonl(reports: &[VerificationReport]) -> Result<String> {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl(reports: &[VerificationReport], path: &Path) -> Result<()> {
    std::fs::write(path, to_jsonl(reports)?)?;
    Ok(())
}

/// Fixed-width, human-readable table.
pub fn summary_table(reports: &[VerificationReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.check_name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:<12}  {:>14}  {:>14}  {:>10}  {:>10}",
        "check", "status", "estimate", "oracle", "std_err", "samples"
    );
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
    for r in reports {
        let _ = writeln!(
            s,
            "{:<width$}  {:<12}  {:>14}  {:>14}  {:>10.3e}  {:>10}",
            r.check_name,
            format!("{:?}", r.status).to_lowercase(),
            fmt(Some(r.estimate)),
            fmt(r.oracle),
            r.standard_error,
            r.samples_used
        );
    }
    let passed = reports.iter().filter(|r| r.passed()).count();
    let _ = writeln!(s, "{passed}/{} passed", reports.len());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judging() {
        let r = VerificationReport::new("a", 1.0, 0.1, 10)
            .with_oracle(1.3)
            .judged();
        assert!(r.passed());
        let r = VerificationReport::new("a", 1.0, 0.1, 10)
            .with_oracle(1.5)
            .judged();
        assert!(!r.passed());
        let r = VerificationReport::new("a", 1.0, 0.0, 10)
            .with_oracle(1.5)
            .with_tolerance(0.6)
            .judged();
        assert!(r.passed());
        let r = VerificationReport::new("a", 1.0, 0.01, 10)
            .with_bounds(Some(1.1), None)
            .judged();
        assert!(!r.passed());
        let r = VerificationReport::new("a", f64::NAN, 0.01, 10).judged();
        assert!(!r.passed());
    }

    #[test]
    fn jsonl_and_table() {
        let reports = vec![
            VerificationReport::new("x", 0.5, 0.01, 3)
                .with_oracle(0.5)
                .judged(),
            VerificationReport::new("y", 2.0, 0.0, 0).judged(),
        ];
        let text = to_jsonl(&reports).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: VerificationReport = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, reports[0]);
        assert!(summary_table(&reports).contains("2/2 passed"));
    }
}
