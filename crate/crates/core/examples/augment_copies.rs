//! Draw perturbed copies of one input with each augmentation family.

use maxup_lab::augment::{sample, AugmentationSpec};
use maxup_lab::math::{RngStream, Tensor};

fn show(name: &str, copies: &[Tensor]) {
    println!("{name}:");
    for c in copies {
        let row: Vec<String> = c.data().iter().map(|v| format!("{v:6.2}")).collect();
        println!("  [{}]", row.join(" "));
    }
}

fn main() -> maxup_lab::Result<()> {
    let x = Tensor::vector((0..16).map(|i| i as f64 / 4.0).collect());
    let mut rng = RngStream::new(1, 0);

    show(
        "identity",
        &sample(&AugmentationSpec::identity(), &x, 2, &mut rng)?,
    );
    show(
        "gaussian sigma=0.1",
        &sample(&AugmentationSpec::gaussian(0.1), &x, 3, &mut rng)?,
    );
    // 4x4 grid, half-side patch zeroed
    show(
        "cutout",
        &sample(
            &AugmentationSpec::cutout(0.5, 0.0, Some((4, 4))),
            &x,
            3,
            &mut rng,
        )?,
    );

    // the same stream state reproduces the same copies
    let a = sample(
        &AugmentationSpec::gaussian(1.0),
        &x,
        2,
        &mut RngStream::new(9, 3),
    )?;
    let b = sample(
        &AugmentationSpec::gaussian(1.0),
        &x,
        2,
        &mut RngStream::new(9, 3),
    )?;
    assert_eq!(a, b);
    Ok(())
}
