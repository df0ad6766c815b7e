use maxup_lab::math::special::gaussian_cdf;
use maxup_lab::math::{integrate, monte_carlo, QuadratureRule, RngStream, Weight};
use proptest::prelude::*;

#[test]
fn s_phi_of_s_against_ten_million_draws() {
    let exact = integrate(
        |s| s * gaussian_cdf(s),
        QuadratureRule::gauss_hermite(),
        Weight::Gaussian,
        None,
    )
    .unwrap();
    let mc = monte_carlo(10_000_000, 11, 3, |r| {
        let z = r.standard_normal();
        z * gaussian_cdf(z)
    });
    assert!(
        (mc.mean - exact).abs() <= 4.0 * mc.standard_error,
        "{mc:?} vs {exact}"
    );
}

#[test]
fn random_smooth_integrands_against_monte_carlo() {
    for i in 0..20u64 {
        let mut rng = RngStream::derived(21, &[i]);
        let c: Vec<f64> = (0..5).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let f = move |s: f64| {
            c[0] * (c[1] * 3.0 * s).sin()
                + c[2] * s * s
                + c[3] * gaussian_cdf(2.0 * c[4] * s)
                + c[4]
        };
        let gh = integrate(
            f.clone(),
            QuadratureRule::gauss_hermite(),
            Weight::Gaussian,
            None,
        )
        .unwrap();
        let simpson = integrate(
            f.clone(),
            QuadratureRule::adaptive_simpson(),
            Weight::Gaussian,
            None,
        )
        .unwrap();
        assert!(
            (gh - simpson).abs() < 1e-8,
            "integrand {i}: {gh} vs {simpson}"
        );
        let mc = monte_carlo(200_000, 22, i, |r| f(r.standard_normal()));
        assert!(
            (mc.mean - gh).abs() <= 4.0 * mc.standard_error,
            "integrand {i}: {mc:?} vs {gh}"
        );
    }
}

#[test]
fn monte_carlo_is_independent_of_thread_count() {
    let run = || monte_carlo(100_000, 5, 5, |r| r.standard_normal().powi(2));
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run);
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(run);
    assert_eq!(serial, parallel);
}

proptest! {
    #[test]
    fn cdf_symmetry_and_monotonicity(a in -8.0f64..8.0, b in -8.0f64..8.0) {
        prop_assert!((gaussian_cdf(a) + gaussian_cdf(-a) - 1.0).abs() < 1e-15);
        if a < b {
            prop_assert!(gaussian_cdf(a) <= gaussian_cdf(b));
        }
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), id in any::<u64>()) {
        let mut a = RngStream::new(seed, id);
        let mut b = RngStream::new(seed, id);
        for _ in 0..8 {
            prop_assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }
}
