//! Rank hidden-layer shapes by cross-validated error on a 160-row dataset.

use ortg_lab::eval::FitScope;
use ortg_lab::ingest::{generate_synthetic_dataset, SyntheticSpec};
use ortg_lab::model::{search_mlp_architecture, TrainConfig};

fn main() {
    let (data, _) = generate_synthetic_dataset(3, 160, &SyntheticSpec::default()).unwrap();
    let shapes = vec![vec![1], vec![2], vec![3], vec![5], vec![4, 2]];
    let cfg = TrainConfig {
        restarts: 2,
        ..TrainConfig::with_seed(3)
    };
    let ranked = search_mlp_architecture(&data, &shapes, 18, &cfg, FitScope::Global).unwrap();
    for (i, e) in ranked.iter().enumerate() {
        println!(
            "{}. {:<7} params {:>3}  rmse_ortg {:.3}  r2 {:.3}",
            i + 1,
            format!("{:?}", e.hidden),
            e.parameter_count,
            e.rmse_ortg,
            e.r_squared
        );
    }
}
