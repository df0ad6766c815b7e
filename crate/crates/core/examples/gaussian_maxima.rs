//! Expected maxima of Gaussian samples: Monte Carlo, quadrature and the
//! `sqrt(ln m)` envelope.

use maxup_lab::math::RngStream;
use maxup_lab::verify::{compute_g, estimate_c_m_sigma, expected_max_standard};

fn main() -> maxup_lab::Result<()> {
    println!("   m   monte_carlo   quadrature   0.23*sqrt(ln m)   sqrt(2 ln m)");
    for k in 1..=7 {
        let m = 1usize << k;
        let mc = estimate_c_m_sigma(m, 1.0, 200_000, &RngStream::new(3, k));
        let exact = expected_max_standard(m)?;
        let root = (m as f64).ln().sqrt();
        println!(
            "{m:>4}   {:.4}±{:.4}   {exact:.6}   {:>15.4}   {:>12.4}",
            mc.mean,
            mc.standard_error,
            0.23 * root,
            std::f64::consts::SQRT_2 * root
        );
    }
    println!("G(q=5, R=2, sigma=0.5) = {:.6}", compute_g(5, 2.0, 0.5)?);
    Ok(())
}
