//! Expected maxima of Gaussian samples.

use crate::error::{Error, Result};
use crate::math::special::expected_max_of_two;
use crate::math::tensor::{dot, norm2};
use crate::math::{
    gaussian_cdf, integrate, monte_carlo, monte_carlo_vec, MeanEstimate, QuadratureRule, RngStream,
    Tensor, Weight,
};

use super::VerificationReport;

/// Largest `q` integrated with Gauss-Hermite; beyond it `Phi^(q-1)` is too sharp.
const HERMITE_MAX_Q: usize = 16;

/// `E[max of q i.i.d. N(0, 1)] = int q s Phi(s)^(q-1) phi(s) ds`.
pub fn expected_max_standard(q: usize) -> Result<f64> {
    match q {
        0 => Err(Error::BadSpec("q must be at least 1".into())),
        1 => Ok(0.0),
        _ => {
            let f = |s: f64| q as f64 * s * gaussian_cdf(s).powi(q as i32 - 1);
            let rule = if q <= HERMITE_MAX_Q {
                QuadratureRule::gauss_hermite()
            } else {
                QuadratureRule::adaptive_simpson()
            };
            integrate(f, rule, Weight::Gaussian, None)
        }
    }
}

/// `G_{q,R} = E[max of q i.i.d. N(0, (R sigma_xi)^2)]`.
pub fn compute_g(q: usize, r: f64, sigma_xi: f64) -> Result<f64> {
    if !(r > 0.0 && sigma_xi > 0.0) {
        return Err(Error::BadSpec(format!(
            "R and sigma_xi must be positive, got {r} and {sigma_xi}"
        )));
    }
    Ok(r * sigma_xi * expected_max_standard(q)?)
}

/// Monte-Carlo estimate of `c_{m,sigma} = E[max of m i.i.d. N(0, sigma^2)]`.
pub fn estimate_c_m_sigma(
    m: usize,
    sigma: f64,
    mc_samples: usize,
    rng: &RngStream,
) -> MeanEstimate {
    monte_carlo(mc_samples, rng.seed(), rng.stream_id(), |r| {
        let mut best = f64::NEG_INFINITY;
        for _ in 0..m.max(1) {
            best = best.max(sigma * r.standard_normal());
        }
        best
    })
}

/// Estimate of `c_{m,sigma}` checked against `[0.23, sqrt 2] * sigma * sqrt(ln m)`.
pub fn lemma1_band_report(
    m: usize,
    sigma: f64,
    mc_samples: usize,
    rng: &RngStream,
) -> VerificationReport {
    let est = estimate_c_m_sigma(m, sigma, mc_samples, rng);
    let scale = sigma * (m as f64).ln().sqrt();
    let mut report = VerificationReport::new(
        format!("lemma1_band/m={m}/sigma={sigma}"),
        est.mean,
        est.standard_error,
        est.samples as u64,
    );
    if m >= 2 {
        report = report.with_bounds(Some(0.23 * scale), Some(std::f64::consts::SQRT_2 * scale));
    } else {
        report = report.with_oracle(0.0);
    }
    if m == 2 {
        report = report.with_oracle(sigma * expected_max_of_two());
    }
    report.judged()
}

/// Paired check that `c_{m,sigma} < c_{2m,sigma}` on shared draws.
pub fn verify_c_monotone(
    m: usize,
    sigma: f64,
    mc_samples: usize,
    rng: &RngStream,
) -> VerificationReport {
    let est = monte_carlo(mc_samples, rng.seed(), rng.stream_id(), |r| {
        let mut first = f64::NEG_INFINITY;
        let mut all = f64::NEG_INFINITY;
        for i in 0..2 * m {
            let z = sigma * r.standard_normal();
            if i < m {
                first = first.max(z);
            }
            all = all.max(z);
        }
        all - first
    });
    let strict = est.mean - 4.0 * est.standard_error > 0.0;
    VerificationReport::new(
        format!("lemma1_band/monotone/m={m}->{}", 2 * m),
        est.mean,
        est.standard_error,
        est.samples as u64,
    )
    .with_bounds(Some(0.0), None)
    .with_status(if strict {
        super::Status::Pass
    } else {
        super::Status::Fail
    })
    .with_note("paired difference must exceed zero by four standard errors")
}

/// `E[max_i <g, z_i>]` by direct sampling against `c_{m,sigma} * ||g||` from an independent stream.
pub fn verify_max_inner_product(
    g: &Tensor,
    m: usize,
    sigma: f64,
    mc_samples: usize,
    rng: &RngStream,
) -> Result<VerificationReport> {
    let gn = g.norm2();
    if gn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let g = g.data();
    let direct = monte_carlo_vec(
        mc_samples,
        1,
        rng.seed(),
        rng.child(1).stream_id(),
        |r, out| {
            let mut z = vec![0.0; g.len()];
            let mut best = f64::NEG_INFINITY;
            for _ in 0..m {
                r.fill_standard_normal(&mut z);
                best = best.max(sigma * dot(g, &z));
            }
            out[0] = best;
        },
    )[0];
    let c = estimate_c_m_sigma(m, sigma, mc_samples, &rng.child(2));
    let oracle = c.mean * gn;
    let se = direct.standard_error.hypot(c.standard_error * gn);
    Ok(VerificationReport::new(
        format!("max_inner_product/m={m}/d={}", g.len()),
        direct.mean,
        se,
        (direct.samples + c.samples) as u64,
    )
    .with_oracle(oracle)
    .with_note(format!("||g|| = {}", norm2(g)))
    .judged())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_q_closed_forms() {
        let pi = std::f64::consts::PI;
        assert_eq!(expected_max_standard(1).unwrap(), 0.0);
        assert!((expected_max_standard(2).unwrap() - 1.0 / pi.sqrt()).abs() < 1e-12);
        assert!((expected_max_standard(3).unwrap() - 1.5 / pi.sqrt()).abs() < 1e-12);
        // E[max of 4] = 6/sqrt(pi)^3 * atan(sqrt 2)
        let four = 6.0 / pi.powf(1.5) * 2f64.sqrt().atan();
        assert!((expected_max_standard(4).unwrap() - four).abs() < 1e-12);
    }

    #[test]
    fn hermite_and_simpson_agree_at_the_switch() {
        let q = HERMITE_MAX_Q;
        let f = |s: f64| q as f64 * s * gaussian_cdf(s).powi(q as i32 - 1);
        let gh = integrate(f, QuadratureRule::gauss_hermite(), Weight::Gaussian, None).unwrap();
        let si = integrate(
            f,
            QuadratureRule::adaptive_simpson(),
            Weight::Gaussian,
            None,
        )
        .unwrap();
        assert!((gh - si).abs() < 1e-9, "{gh} vs {si}");
    }

    #[test]
    fn g_scaling() {
        assert_eq!(compute_g(1, 3.0, 0.5).unwrap(), 0.0);
        for q in [2, 5, 40] {
            let a = compute_g(q, 1.0, 0.7).unwrap();
            let b = compute_g(q, 2.0, 0.7).unwrap();
            assert!((b - 2.0 * a).abs() < 1e-10);
        }
        assert!(compute_g(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn c_estimates() {
        let rng = RngStream::new(3, 9);
        let one = estimate_c_m_sigma(1, 1.0, 100_000, &rng);
        assert!(one.mean.abs() <= 4.0 * one.standard_error);
        let two = estimate_c_m_sigma(2, 1.0, 100_000, &rng);
        assert!((two.mean - expected_max_of_two()).abs() <= 4.0 * two.standard_error);
        assert!(lemma1_band_report(10, 1.0, 50_000, &rng).passed());
    }

    #[test]
    fn inner_product_reduction_and_homogeneity() {
        let rng = RngStream::new(1, 1);
        let e1 = Tensor::vector(vec![1.0, 0.0, 0.0]);
        let r1 = verify_max_inner_product(&e1, 4, 1.0, 100_000, &rng).unwrap();
        assert!(r1.passed());
        let big = Tensor::vector(vec![10.0, 0.0, 0.0]);
        let r10 = verify_max_inner_product(&big, 4, 1.0, 100_000, &rng).unwrap();
        assert!((r10.estimate - 10.0 * r1.estimate).abs() < 1e-9);
        assert!(matches!(
            verify_max_inner_product(&Tensor::zeros(&[2]), 2, 1.0, 10, &rng),
            Err(Error::ZeroVector)
        ));
    }
}
