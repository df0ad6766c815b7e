//! Resolve a JSON run configuration with overrides and benchmark every method on it.
//!
//! `cargo run --release --example config_bench -- [config.json] [key=value ...]`

use std::path::PathBuf;

use maxup_lab::cli::{resolve_config, run_bench};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/configs/halfspace_maxup.json"
        ))
    });
    let mut overrides: Vec<String> = args.collect();
    if overrides.is_empty() {
        overrides = vec!["train.epochs=5".into(), "bench.repeats=1".into()];
    }
    let run = || -> Result<(), maxup_lab::cli::CliError> {
        let cfg = resolve_config(Some(&path), &overrides, None, &[])?;
        let table = run_bench(&cfg)?;
        print!("{}", table.to_csv());
        Ok(())
    };
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
