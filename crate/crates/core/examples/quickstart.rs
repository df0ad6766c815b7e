//! Train a small tanh network with worst-of-m Gaussian augmentation.
//!
//! `cargo run --release --example quickstart`

use maxup_lab::augment::AugmentationSpec;
use maxup_lab::data::{generate, DatasetSpec};
use maxup_lab::math::RngStream;
use maxup_lab::models::{Activation, Model};
use maxup_lab::trainers::{train, Method, TrainConfig};

fn main() -> maxup_lab::Result<()> {
    let (train_set, test_set) = generate(&DatasetSpec::halfspace(500, 2000, 10, 1.0, 7))?;
    let model = Model::mlp(&[10, 16, 1], Activation::Tanh, &mut RngStream::new(7, 0))?;

    let mut cfg = TrainConfig::new(Method::Maxup, 4, 0.1, 20, 7);
    cfg.spec = AugmentationSpec::gaussian(0.3);

    let (_, trace) = train(&model, &train_set, &test_set, &cfg)?;
    print!("{}", trace.to_csv());
    Ok(())
}
