//! Save a generated dataset and a trained model, then load both back.

use maxup_lab::data::{generate, load_csv, save_csv, DatasetSpec};
use maxup_lab::models::Model;
use maxup_lab::trainers::{evaluate, train, Method, TrainConfig};

fn main() -> maxup_lab::Result<()> {
    let dir = std::env::temp_dir().join("maxup-lab-roundtrip");
    std::fs::create_dir_all(&dir)?;

    let (tr, te) = generate(&DatasetSpec::halfspace(100, 100, 3, 1.0, 2))?;
    save_csv(&tr, &dir.join("train.csv"))?;
    let loaded = load_csv(&dir.join("train.csv"))?;
    assert_eq!(tr.content_hash(), loaded.content_hash());

    let cfg = TrainConfig::new(Method::Erm, 1, 0.1, 10, 2);
    let (model, _) = train(&Model::linear(vec![0.0; 3]), &loaded, &te, &cfg)?;
    model.save_json(&dir.join("model.json"))?;
    let back = Model::load_json(&dir.join("model.json"))?;
    let (loss, acc) = evaluate(&back, &cfg.loss, &te)?;
    println!(
        "dataset {} round-tripped; reloaded model test loss {loss:.4}, accuracy {acc:.3}",
        loaded.content_hash()
    );
    println!("files in {}", dir.display());
    Ok(())
}
