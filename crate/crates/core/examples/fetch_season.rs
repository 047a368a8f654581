//! Download one season from a stats endpoint and print the first rows of the
//! canonical CSV.
//!
//!     cargo run --example fetch_season -- <ENDPOINT> [SEASON]

use ortg_lab::ingest::{fetch_playtype_stats, parse_dataset_csv, RetryPolicy};

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(endpoint) = args.next() else {
        eprintln!("usage: fetch_season <ENDPOINT> [SEASON]");
        std::process::exit(1);
    };
    let season = args.next().unwrap_or_else(|| "2022-23".into());
    match fetch_playtype_stats(&endpoint, &season, &RetryPolicy::default()) {
        Ok(bytes) => {
            let data = parse_dataset_csv(bytes.as_slice()).unwrap();
            println!("{} teams for {season}", data.len());
            for row in data.rows().iter().take(5) {
                println!("  {} ortg {:.1} iso_freq {:.3}", row.team, row.ortg, row.features.values()[0]);
            }
        }
        Err(e) => {
            eprintln!("fetch failed: {e}");
            std::process::exit(1);
        }
    }
}
