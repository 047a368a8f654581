//! Generate a synthetic season table with a planted linear rule and write it
//! as canonical CSV.
//!
//!     cargo run --example synthesize_dataset -- [OUT.csv]

use ortg_lab::ingest::{generate_synthetic_dataset, parse_dataset_csv, serialize_dataset_csv, SyntheticSpec};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic.csv".into());
    let spec = SyntheticSpec { sigma: 2.0, ..SyntheticSpec::default() };
    let (data, rule) = generate_synthetic_dataset(7, 240, &spec).expect("valid spec");

    let text = serialize_dataset_csv(&data);
    std::fs::write(&out, &text).expect("write csv");
    assert_eq!(parse_dataset_csv(text.as_bytes()).unwrap(), data);

    let first = &data.rows()[0];
    println!("{} rows written to {out} (fingerprint {})", data.len(), data.fingerprint());
    println!(
        "{} {}: ortg {:.2}, noiseless rule {:.2}, frequency total {:.3}",
        first.season,
        first.team,
        first.ortg,
        rule.evaluate(first.features.values()),
        first.features.freq_sum()
    );
}
