//! Small-sigma residuals of the worst-of-m and averaged losses on a random
//! tanh network. The worst-of-m residual should shrink by about 4x per halving.

use maxup_lab::math::RngStream;
use maxup_lab::verify::{
    random_tanh_probes, verify_avg_aug_expansion, verify_maxup_expansion, ExpansionProbe, Order,
};

fn main() -> maxup_lab::Result<()> {
    let sigmas = vec![0.05, 0.025, 0.0125];
    let (objective, x) = random_tanh_probes(1, 11)?.remove(0);
    let probe = ExpansionProbe::new(objective, x, sigmas, 4, 200_000, Order::Quadratic)?;

    let maxup = verify_maxup_expansion(&probe, &RngStream::new(11, 1))?;
    println!("scale,residual,standard_error,leading_term");
    for row in maxup.to_csv_rows("maxup") {
        println!("{row}");
    }
    println!(
        "fitted slope {:.3} ({:?})",
        maxup.slope.unwrap_or(f64::NAN),
        maxup.report.status
    );

    let avg = verify_avg_aug_expansion(&probe, 1e-4, &RngStream::new(11, 2))?;
    println!(
        "avg: {:.5} against half the Hessian trace {:.5}",
        avg.report.estimate,
        avg.report.oracle.unwrap_or(f64::NAN)
    );
    Ok(())
}
