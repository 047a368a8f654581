//! Fit the linear and MLP predictors, save one to a model file, reload it and
//! check that predictions survive the round trip.

use ortg_lab::ingest::{generate_synthetic_dataset, SyntheticSpec};
use ortg_lab::model::{load_model, save_model, ModelSpec, TrainConfig, TrainedPredictor};

fn main() {
    let (data, _) = generate_synthetic_dataset(7, 240, &SyntheticSpec::default()).unwrap();
    let cfg = TrainConfig::with_seed(7);

    for spec in [ModelSpec::Linear, ModelSpec::mlp(&[3])] {
        let p = TrainedPredictor::fit(&data, &spec, 18, &cfg).unwrap();
        println!("{spec}: training mse (normalized) {:.3e}", p.metadata().final_loss);
    }

    let p = TrainedPredictor::fit(&data, &ModelSpec::mlp(&[3]), 18, &cfg).unwrap();
    let dir = std::env::temp_dir().join("ortg-lab-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.json");
    save_model(&p, &path).unwrap();
    let q = load_model(&path).unwrap();

    let row = &data.rows()[3];
    let (a, b) = (p.predict(&row.features), q.predict(&row.features));
    assert_eq!(a.to_bits(), b.to_bits());
    println!("{} {}: actual {:.2}, predicted {:.2} (reloaded from {})", row.season, row.team, row.ortg, b, path.display());
}
