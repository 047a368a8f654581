use serde::Serialize;

use crate::features::{FeatureKey, FeatureVector, MetricKind, PlaytypeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Below,
    Within,
    Above,
}

impl Verdict {
    /// Inclusive band test.
    pub fn of(value: f64, lo: f64, hi: f64) -> Self {
        if value < lo {
            Verdict::Below
        } else if value > hi {
            Verdict::Above
        } else {
            Verdict::Within
        }
    }
}

/// A frequency band: the summed frequency of `playtypes` should fall in
/// `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub id: &'static str,
    pub name: &'static str,
    pub playtypes: &'static [PlaytypeKind],
    pub lo: f64,
    pub hi: f64,
}

pub const HYPOTHESIS_BANDS: [Band; 4] = [
    Band {
        id: "i",
        name: "isolation frequency",
        playtypes: &[PlaytypeKind::Isolation],
        lo: 0.20,
        hi: 0.25,
    },
    Band {
        id: "ii",
        name: "spot-up frequency",
        playtypes: &[PlaytypeKind::SpotUp],
        lo: 0.25,
        hi: 0.28,
    },
    Band {
        id: "iii",
        name: "transition frequency",
        playtypes: &[PlaytypeKind::Transition],
        lo: 0.17,
        hi: 0.20,
    },
    Band {
        id: "iv",
        name: "pick-and-roll frequency",
        playtypes: &[PlaytypeKind::PnrBallHandler, PlaytypeKind::PnrRollMan],
        lo: 0.13,
        hi: 0.17,
    },
];

/// Minimum spot-up field goal percentage for band (ii).
pub const SPOTUP_FG_PCT_FLOOR: f64 = 0.40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCheck {
    pub id: &'static str,
    pub name: &'static str,
    pub value: f64,
    pub band: [f64; 2],
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<BandCheck>,
    pub within: usize,
}

/// Score a feature vector against the four bands.
///
/// Band (ii) also requires spot-up `fg_pct >= 0.40`; a lower percentage
/// makes the verdict `below` regardless of frequency.
pub fn hypothesis_check(features: &FeatureVector) -> HypothesisReport {
    let checks: Vec<BandCheck> = HYPOTHESIS_BANDS
        .iter()
        .map(|band| {
            let value: f64 = band
                .playtypes
                .iter()
                .map(|&p| features.get(FeatureKey::new(p, MetricKind::Freq)))
                .sum();
            let mut verdict = Verdict::of(value, band.lo, band.hi);
            if band.id == "ii" {
                let fg = features.get(FeatureKey::new(PlaytypeKind::SpotUp, MetricKind::FgPct));
                if fg < SPOTUP_FG_PCT_FLOOR {
                    verdict = Verdict::Below;
                }
            }
            BandCheck {
                id: band.id,
                name: band.name,
                value,
                band: [band.lo, band.hi],
                verdict,
            }
        })
        .collect();
    let within = checks.iter().filter(|c| c.verdict == Verdict::Within).count();
    HypothesisReport { checks, within }
}
