//! Worst-of-q minus single-draw loss on training data and on a large held-out
//! sample, for growing q.

use maxup_lab::verify::{run_check, VerifyOptions};

fn main() -> maxup_lab::Result<()> {
    let out = run_check(
        "gap_experiment",
        &VerifyOptions {
            samples: 200_000,
            seed: 0,
        },
    )?;
    let table = out.gap_table.expect("gap check fills the table");
    print!("{}", table.to_csv());
    println!("monotone in q: {}", table.monotone());
    println!(
        "q with train gap below test gap: {:?}",
        table.train_below_test()
    );
    Ok(())
}
