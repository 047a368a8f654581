//! Team-season datasets: the labeled rows the models learn from, how they
//! are read and written, generated, and fetched.

mod csv;
pub mod fetch;
pub mod synth;

use std::collections::HashSet;

use thiserror::Error;

use crate::features::{FeatureError, FeatureVector, FEATURE_COUNT};

pub use self::csv::{csv_header, parse_dataset_csv, serialize_dataset_csv, COLUMN_COUNT};
pub use fetch::{fetch_playtype_stats, FetchError, RetryPolicy};
pub use synth::{generate_synthetic_dataset, PlantedRule, SyntheticSpec};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("zero possessions")]
    ZeroPossessions,
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("duplicate row for season {season}, team {team}")]
    DuplicateRow { season: String, team: String },
    #[error("row {season} {team}: ORTG must be finite and positive, got {ortg}")]
    InvalidOrtg { season: String, team: String, ortg: f64 },
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

/// Offensive rating: points per 100 possessions.
pub fn compute_ortg(points_scored: u64, possessions: u64) -> Result<f64, IngestError> {
    if possessions == 0 {
        return Err(IngestError::ZeroPossessions);
    }
    Ok(100.0 * points_scored as f64 / possessions as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeamSeasonRow {
    pub season: String,
    pub team: String,
    pub ortg: f64,
    pub features: FeatureVector,
}

impl TeamSeasonRow {
    pub fn new(
        season: impl Into<String>,
        team: impl Into<String>,
        ortg: f64,
        features: FeatureVector,
    ) -> Result<Self, IngestError> {
        let row = Self {
            season: season.into(),
            team: team.into(),
            ortg,
            features,
        };
        if !(row.ortg.is_finite() && row.ortg > 0.0) {
            return Err(IngestError::InvalidOrtg {
                season: row.season,
                team: row.team,
                ortg,
            });
        }
        Ok(row)
    }
}

/// Ordered collection of team-season rows with unique `(season, team)` labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    rows: Vec<TeamSeasonRow>,
}

impl Dataset {
    pub fn new(rows: Vec<TeamSeasonRow>) -> Result<Self, IngestError> {
        let mut seen = HashSet::with_capacity(rows.len());
        for row in &rows {
            if !(row.ortg.is_finite() && row.ortg > 0.0) {
                return Err(IngestError::InvalidOrtg {
                    season: row.season.clone(),
                    team: row.team.clone(),
                    ortg: row.ortg,
                });
            }
            if !seen.insert((row.season.as_str(), row.team.as_str())) {
                return Err(IngestError::DuplicateRow {
                    season: row.season.clone(),
                    team: row.team.clone(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TeamSeasonRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn features(&self) -> Vec<[f64; FEATURE_COUNT]> {
        self.rows.iter().map(|r| *r.features.values()).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ortg).collect()
    }

    /// A copy of the dataset keeping only the rows whose index satisfies `keep`.
    pub fn filter_indices(&self, mut keep: impl FnMut(usize) -> bool) -> Dataset {
        Dataset {
            rows: self
                .rows
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, r)| r.clone())
                .collect(),
        }
    }

    /// 64-bit content hash of the canonical CSV rendering, as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        crate::io::fingerprint64(serialize_dataset_csv(self).as_bytes())
    }
}

impl From<FeatureError> for IngestError {
    fn from(e: FeatureError) -> Self {
        IngestError::Argument(e.to_string())
    }
}
