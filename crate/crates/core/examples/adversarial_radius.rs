//! Inner maximization over an lp ball against the first-order prediction
//! `L(x) + r * ||grad L||_q`, with `q` the conjugate exponent.

use maxup_lab::models::InputObjective;
use maxup_lab::verify::{conjugate_exponent, dual_norm, pga_inner_max, random_tanh_probes};

fn main() -> maxup_lab::Result<()> {
    println!(
        "||(3,-4)||_1 = {}, ||(3,-4)||_2 = {}, ||(3,-4)||_inf = {}",
        dual_norm(&[3.0, -4.0], 1.0)?,
        dual_norm(&[3.0, -4.0], 2.0)?,
        dual_norm(&[3.0, -4.0], f64::INFINITY)?
    );

    let (objective, x) = random_tanh_probes(1, 5)?.remove(0);
    let base = objective.value(&x);
    let g = objective.gradient(&x);
    for p in [2.0, f64::INFINITY] {
        let q = conjugate_exponent(p)?;
        println!("p = {p}");
        for r in [0.02, 0.01, 0.005] {
            let (worst, _) = pga_inner_max(&objective, &x, p, r)?;
            let linear = base + r * dual_norm(&g, q)?;
            println!(
                "  r = {r:<6} ascent {worst:.8}  first order {linear:.8}  gap {:.3e}",
                worst - linear
            );
        }
    }
    Ok(())
}
