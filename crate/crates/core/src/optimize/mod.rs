//! Searching the feature space for high-ORTG gameplans, ranking features by
//! their effect on predicted ORTG, and scoring gameplans against the
//! playtype frequency bands.

mod ascent;
mod hypothesis;
mod region;
mod sensitivity;

use thiserror::Error;

use crate::features::FeatureKey;

pub use ascent::{gameplan_json, optimize_gameplan, plan_document, ActiveConstraint, GameplanCandidate, Locks, OptimizeConfig, Surrogate};
pub use hypothesis::{hypothesis_check, BandCheck, HypothesisReport, Verdict, HYPOTHESIS_BANDS};
pub use region::{derive_feasible_region, project_feasible, FeasibleRegion};
pub use sensitivity::{sensitivity_rank, SensitivityEntry, SensitivityReport};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("locked `{key}` = {value} lies outside the feasible range [{lower}, {upper}]")]
    LockedConflict {
        key: FeatureKey,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("locked frequencies force a frequency sum of at least {minimum}, above the cap {cap}")]
    LockedFreqSum { minimum: f64, cap: f64 },
}
