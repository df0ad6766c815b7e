//! Probability that at least one of q noisy copies is misclassified by a
//! fixed linear rule: closed form against brute-force sampling.

use maxup_lab::data::{generate, mean_difference_direction, DatasetSpec};
use maxup_lab::math::RngStream;
use maxup_lab::verify::{closed_form_worst_case_01, worst_case_01_monte_carlo};

fn main() -> maxup_lab::Result<()> {
    let (data, _) = generate(&DatasetSpec::halfspace(50, 1, 6, 0.7, 8))?;
    let theta = mean_difference_direction(&data)?;
    for q in 1..=6 {
        let exact = closed_form_worst_case_01(&theta, &data, q, 0.5)?;
        let mc =
            worst_case_01_monte_carlo(&theta, &data, q, 0.5, 20_000, &RngStream::new(8, q as u64))?;
        println!(
            "q = {q}: closed form {exact:.5}  sampled {:.5} ± {:.5}",
            mc.mean, mc.standard_error
        );
    }
    Ok(())
}
