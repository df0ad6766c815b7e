//! Standard normal density and distribution function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1 / sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, `Phi(x) = erfc(-x / sqrt 2) / 2`.
///
/// Uses the `erfc` from `libm` (a port of the FreeBSD implementation, under
/// one ulp), so the lower tail keeps full relative precision.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() * INV_SQRT_2PI
}

/// Closed form of `E[max(Z1, Z2)]` for two independent standard normals.
pub fn expected_max_of_two() -> f64 {
    1.0 / PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Maclaurin series of erf; converges quickly for |x| < 2.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        sum * 2.0 / PI.sqrt()
    }

    #[test]
    fn cdf_fixed_points() {
        assert_eq!(gaussian_cdf(0.0), 0.5);
        assert!((gaussian_cdf(10.0) - 1.0).abs() <= 1e-15);
        let oracle = 0.5 * (1.0 + erf_series(FRAC_1_SQRT_2));
        assert!((gaussian_cdf(1.0) - oracle).abs() < 1e-12);
        assert!((gaussian_cdf(-1.0) - (1.0 - oracle)).abs() < 1e-12);
    }

    #[test]
    fn pdf_fixed_points() {
        assert_eq!(gaussian_pdf(0.0), 0.398_942_280_401_432_7);
        assert_eq!(gaussian_pdf(1.3), gaussian_pdf(-1.3));
        assert!((gaussian_pdf(1.0) - 0.241_970_724_519_143_37).abs() < 1e-16);
        let h = 1e-5;
        let fd = (gaussian_cdf(1.0 + h) - gaussian_cdf(1.0 - h)) / (2.0 * h);
        assert!((fd - 0.241_970_724_519_143_37).abs() < 1e-9);
    }

    #[test]
    fn finite_differences_match_pdf() {
        let mut rng = crate::math::rng::RngStream::new(3, 3);
        let h = 1e-4;
        for _ in 0..1000 {
            let x = rng.uniform_range(-6.0, 6.0);
            let fd = (gaussian_cdf(x + h) - gaussian_cdf(x - h)) / (2.0 * h);
            assert!((fd - gaussian_pdf(x)).abs() < 1e-6, "x = {x}");
        }
    }

    proptest! {
        #[test]
        fn cdf_is_monotone(a in -40.0f64..40.0, b in -40.0f64..40.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(gaussian_cdf(lo) <= gaussian_cdf(hi));
        }

        #[test]
        fn cdf_is_symmetric(x in -40.0f64..40.0) {
            prop_assert!((gaussian_cdf(x) + gaussian_cdf(-x) - 1.0).abs() <= 1e-15);
            let p = gaussian_cdf(x);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
