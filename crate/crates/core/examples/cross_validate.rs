//! Leave-one-out cross-validation of both model classes.

use ortg_lab::eval::{run_loocv, FitScope};
use ortg_lab::ingest::{generate_synthetic_dataset, SyntheticSpec};
use ortg_lab::model::{ModelSpec, TrainConfig};

fn main() {
    let (data, rule) = generate_synthetic_dataset(7, 240, &SyntheticSpec::default()).unwrap();
    println!("planted noise sigma: {}", rule.sigma);
    let cfg = TrainConfig::with_seed(7);
    for spec in [ModelSpec::Linear, ModelSpec::mlp(&[3])] {
        let r = run_loocv(&data, &spec, 18, &cfg, FitScope::Global).unwrap();
        println!(
            "{spec:>8}: rmse_normalized {:.4}  rmse_ortg {:.3}  r2 {:.3}  ({} folds)",
            r.rmse_normalized,
            r.rmse_ortg,
            r.r_squared,
            r.folds.len()
        );
    }
}
