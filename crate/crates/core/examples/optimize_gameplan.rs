//! Search the observed feasible region for the highest predicted ORTG with
//! one playtype frequency locked, then score the result against the
//! hypothesis bands and list the most sensitive features.

use ortg_lab::features::FeatureKey;
use ortg_lab::ingest::{generate_synthetic_dataset, SyntheticSpec};
use ortg_lab::model::{ModelSpec, TrainConfig, TrainedPredictor};
use ortg_lab::optimize::{derive_feasible_region, hypothesis_check, optimize_gameplan, sensitivity_rank, OptimizeConfig};

fn main() {
    let (data, _) = generate_synthetic_dataset(7, 240, &SyntheticSpec::default()).unwrap();
    let model = TrainedPredictor::fit(&data, &ModelSpec::mlp(&[3]), 18, &TrainConfig::with_seed(7)).unwrap();
    let region = derive_feasible_region(&data, 0.0).unwrap();

    let lock: FeatureKey = "trans_freq".parse().unwrap();
    let best = optimize_gameplan(&model, &region, &data, &[(lock, 0.17)], &OptimizeConfig::with_seed(1)).unwrap();
    let top_row = data.rows().iter().map(|r| r.ortg).fold(f64::MIN, f64::max);
    println!("best observed ORTG {top_row:.2}; optimized gameplan {:.2}", best.predicted_ortg);
    println!("active constraints: {}", best.active_constraints.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "));

    for c in hypothesis_check(&best.features).checks {
        println!("  {:<28} {:.3}  [{:.2}, {:.2}]  {:?}", c.name, c.value, c.band[0], c.band[1], c.verdict);
    }

    let report = sensitivity_rank(&model, &data).unwrap();
    println!("\nmost sensitive features:");
    for e in report.entries.iter().take(5) {
        println!("  {:>2}. {:<18} score {:+.3}", e.rank, e.feature, e.score);
    }
}
