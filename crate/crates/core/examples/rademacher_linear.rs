//! Empirical Rademacher complexity of a norm-bounded linear class with and
//! without worst-of-q Gaussian augmentation.

use maxup_lab::data::{generate, DatasetSpec};
use maxup_lab::math::RngStream;
use maxup_lab::verify::empirical_rademacher;

fn main() -> maxup_lab::Result<()> {
    let (data, _) = generate(&DatasetSpec::halfspace(200, 1, 10, 1.0, 4))?;
    println!(" q   plain      augmented  difference        bound");
    for q in [1, 2, 4, 8] {
        let est = empirical_rademacher(&data, 1.0, q, 1.0, 20_000, &RngStream::new(4, q as u64))?;
        println!(
            "{q:>2}   {:.5}    {:.5}    {:+.5}±{:.5}   {:.5}",
            est.rn_f.mean,
            est.rn_f_tilde.mean,
            est.difference.mean,
            est.difference.standard_error,
            est.bound_term
        );
    }
    Ok(())
}
