//! ERM, single-draw averaging, worst-of-m and hardest-example mining on the
//! same data and initialization, averaged over a few seeds.

use maxup_lab::augment::AugmentationSpec;
use maxup_lab::data::{generate, DatasetSpec};
use maxup_lab::math::RngStream;
use maxup_lab::models::{Activation, Model};
use maxup_lab::trainers::{train, Method, TrainConfig};

fn main() -> maxup_lab::Result<()> {
    let seeds = 0..4u64;
    println!("method   test_acc  test_loss  input_grad_norm  backward");
    for method in Method::ALL {
        let (mut acc, mut loss, mut norm, mut backward) = (0.0, 0.0, 0.0, 0);
        for seed in seeds.clone() {
            let (tr, te) = generate(&DatasetSpec::halfspace(500, 1000, 10, 1.0, seed))?;
            let model = Model::mlp(&[10, 16, 1], Activation::Tanh, &mut RngStream::new(seed, 1))?;
            let m = if method == Method::Erm { 1 } else { 4 };
            let mut cfg = TrainConfig::new(method, m, 0.1, 30, seed);
            if method != Method::Erm {
                cfg.spec = AugmentationSpec::gaussian(0.3);
            }
            let (_, trace) = train(&model, &tr, &te, &cfg)?;
            let last = trace.last().expect("at least one epoch");
            acc += last.test_acc;
            loss += last.test_loss;
            norm += last.mean_input_grad_norm;
            backward += trace.totals().backward;
        }
        let k = seeds.clone().count() as f64;
        println!(
            "{:<8} {:>8.4} {:>10.4} {:>16.4} {:>9}",
            method.name(),
            acc / k,
            loss / k,
            norm / k,
            backward / seeds.clone().count() as u64
        );
    }
    Ok(())
}
