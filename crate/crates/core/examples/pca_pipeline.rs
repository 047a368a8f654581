//! Min-max normalization followed by PCA from 48 features to 18 components.

use ortg_lab::ingest::{generate_synthetic_dataset, SyntheticSpec};
use ortg_lab::transform::{TransformPipeline, DEFAULT_COMPONENTS};

fn main() {
    let (data, _) = generate_synthetic_dataset(1, 240, &SyntheticSpec::default()).unwrap();
    let pipeline = TransformPipeline::fit(&data.features(), &data.targets(), DEFAULT_COMPONENTS).unwrap();

    let ev = pipeline.pca().explained_variance();
    let total: f64 = ev.iter().sum();
    println!("component  variance  cumulative share of retained");
    let mut acc = 0.0;
    for (i, v) in ev.iter().enumerate() {
        acc += v;
        println!("{:>9}  {:>8.4}  {:>6.1}%", i + 1, v, 100.0 * acc / total);
    }

    let row = &data.rows()[0];
    let z = pipeline.forward(row.features.values()).unwrap();
    println!("\n{} {} scores: {:.3?}", row.season, row.team, &z[..4]);
    println!(
        "target {:.2} normalizes to {:.4}",
        row.ortg,
        pipeline.normalize_target(row.ortg)
    );
}
