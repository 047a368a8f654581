//! Playtype feature taxonomy.
//!
//! Every team-season profile is a point in a fixed 48-dimensional space:
//! eight offensive playtypes, each described by the same six metrics. The
//! canonical flat index of a coordinate is `playtype_index * 6 + metric_index`
//! and its canonical name is `<playtype code>_<metric code>`, e.g. `iso_freq`
//! or `spotup_fg_pct`.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const PLAYTYPE_COUNT: usize = 8;
pub const METRIC_COUNT: usize = 6;
pub const FEATURE_COUNT: usize = PLAYTYPE_COUNT * METRIC_COUNT;

/// Tolerance applied when checking that modeled playtype frequencies fit in 100%.
pub const FREQ_SUM_TOLERANCE: f64 = 1e-9;

/// Offensive playtypes that describe a deliberate scheme. Putbacks, misc and
/// handoffs are not modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaytypeKind {
    Isolation,
    Transition,
    PnrBallHandler,
    PnrRollMan,
    PostUp,
    SpotUp,
    Cut,
    OffScreen,
}

impl PlaytypeKind {
    pub const ALL: [PlaytypeKind; PLAYTYPE_COUNT] = [
        PlaytypeKind::Isolation,
        PlaytypeKind::Transition,
        PlaytypeKind::PnrBallHandler,
        PlaytypeKind::PnrRollMan,
        PlaytypeKind::PostUp,
        PlaytypeKind::SpotUp,
        PlaytypeKind::Cut,
        PlaytypeKind::OffScreen,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short code used in column and feature names.
    pub fn code(self) -> &'static str {
        match self {
            PlaytypeKind::Isolation => "iso",
            PlaytypeKind::Transition => "trans",
            PlaytypeKind::PnrBallHandler => "prbh",
            PlaytypeKind::PnrRollMan => "prrm",
            PlaytypeKind::PostUp => "postup",
            PlaytypeKind::SpotUp => "spotup",
            PlaytypeKind::Cut => "cut",
            PlaytypeKind::OffScreen => "offscr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Freq,
    FgPct,
    FtFreq,
    TovFreq,
    AndOneFreq,
    ScoreFreq,
}

impl MetricKind {
    pub const ALL: [MetricKind; METRIC_COUNT] = [
        MetricKind::Freq,
        MetricKind::FgPct,
        MetricKind::FtFreq,
        MetricKind::TovFreq,
        MetricKind::AndOneFreq,
        MetricKind::ScoreFreq,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            MetricKind::Freq => "freq",
            MetricKind::FgPct => "fg_pct",
            MetricKind::FtFreq => "ft_freq",
            MetricKind::TovFreq => "tov_freq",
            MetricKind::AndOneFreq => "and1_freq",
            MetricKind::ScoreFreq => "score_freq",
        }
    }
}

/// One coordinate of the feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureKey {
    pub playtype: PlaytypeKind,
    pub metric: MetricKind,
}

impl FeatureKey {
    pub const fn new(playtype: PlaytypeKind, metric: MetricKind) -> Self {
        Self { playtype, metric }
    }

    pub fn index(self) -> usize {
        self.playtype.index() * METRIC_COUNT + self.metric.index()
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if index >= FEATURE_COUNT {
            return None;
        }
        Some(Self {
            playtype: PlaytypeKind::ALL[index / METRIC_COUNT],
            metric: MetricKind::ALL[index % METRIC_COUNT],
        })
    }

    /// All 48 keys in canonical order.
    pub fn all() -> impl Iterator<Item = FeatureKey> {
        (0..FEATURE_COUNT).map(|i| FeatureKey::from_index(i).unwrap())
    }

    /// The eight frequency coordinates, in playtype order.
    pub fn freq_keys() -> impl Iterator<Item = FeatureKey> {
        PlaytypeKind::ALL
            .into_iter()
            .map(|p| FeatureKey::new(p, MetricKind::Freq))
    }

    pub fn name(self) -> &'static str {
        FEATURE_NAMES[self.index()]
    }

    pub fn is_freq(self) -> bool {
        self.metric == MetricKind::Freq
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown feature name `{0}`")]
pub struct UnknownFeature(pub String);

impl FromStr for FeatureKey {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == s)
            .and_then(FeatureKey::from_index)
            .ok_or_else(|| UnknownFeature(s.to_string()))
    }
}

/// Canonical feature names, indexed by flat feature index.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "iso_freq",
    "iso_fg_pct",
    "iso_ft_freq",
    "iso_tov_freq",
    "iso_and1_freq",
    "iso_score_freq",
    "trans_freq",
    "trans_fg_pct",
    "trans_ft_freq",
    "trans_tov_freq",
    "trans_and1_freq",
    "trans_score_freq",
    "prbh_freq",
    "prbh_fg_pct",
    "prbh_ft_freq",
    "prbh_tov_freq",
    "prbh_and1_freq",
    "prbh_score_freq",
    "prrm_freq",
    "prrm_fg_pct",
    "prrm_ft_freq",
    "prrm_tov_freq",
    "prrm_and1_freq",
    "prrm_score_freq",
    "postup_freq",
    "postup_fg_pct",
    "postup_ft_freq",
    "postup_tov_freq",
    "postup_and1_freq",
    "postup_score_freq",
    "spotup_freq",
    "spotup_fg_pct",
    "spotup_ft_freq",
    "spotup_tov_freq",
    "spotup_and1_freq",
    "spotup_score_freq",
    "cut_freq",
    "cut_fg_pct",
    "cut_ft_freq",
    "cut_tov_freq",
    "cut_and1_freq",
    "cut_score_freq",
    "offscr_freq",
    "offscr_fg_pct",
    "offscr_ft_freq",
    "offscr_tov_freq",
    "offscr_and1_freq",
    "offscr_score_freq",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("feature `{key}` is not finite")]
    NotFinite { key: FeatureKey },
    #[error("feature `{key}` = {value} is outside [0, 1]")]
    OutOfRange { key: FeatureKey, value: f64 },
    #[error("playtype frequencies sum to {sum}, above 1")]
    FreqSumExceeded { sum: f64 },
    #[error("missing feature `{0}`")]
    Missing(FeatureKey),
    #[error(transparent)]
    Unknown(#[from] UnknownFeature),
}

/// Sum of the eight playtype frequencies stored in a raw 48-vector.
pub fn freq_sum(values: &[f64; FEATURE_COUNT]) -> f64 {
    FeatureKey::freq_keys().map(|k| values[k.index()]).sum()
}

/// A validated team-season profile: 48 fractions in `[0, 1]` whose
/// frequency coordinates sum to at most 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector([f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_COUNT]) -> Result<Self, FeatureError> {
        for key in FeatureKey::all() {
            let value = values[key.index()];
            if !value.is_finite() {
                return Err(FeatureError::NotFinite { key });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(FeatureError::OutOfRange { key, value });
            }
        }
        let sum = freq_sum(&values);
        if sum > 1.0 + FREQ_SUM_TOLERANCE {
            return Err(FeatureError::FreqSumExceeded { sum });
        }
        Ok(Self(values))
    }

    pub fn from_named<'a, I>(pairs: I) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut values = [f64::NAN; FEATURE_COUNT];
        let mut seen = [false; FEATURE_COUNT];
        for (name, value) in pairs {
            let key: FeatureKey = name.parse()?;
            values[key.index()] = value;
            seen[key.index()] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(FeatureError::Missing(FeatureKey::from_index(i).unwrap()));
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn get(&self, key: FeatureKey) -> f64 {
        self.0[key.index()]
    }

    pub fn freq_sum(&self) -> f64 {
        freq_sum(&self.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureKey, f64)> + '_ {
        FeatureKey::all().map(move |k| (k, self.0[k.index()]))
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(FEATURE_COUNT))?;
        for (key, value) in self.iter() {
            map.serialize_entry(key.name(), &value)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for FeatureVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct NamedVisitor;

        impl<'de> Visitor<'de> for NamedVisitor {
            type Value = FeatureVector;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map of the 48 canonical feature names to fractions")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut pairs: Vec<(String, f64)> = Vec::with_capacity(FEATURE_COUNT);
                while let Some((name, value)) = access.next_entry::<String, f64>()? {
                    if pairs.iter().any(|(n, _)| *n == name) {
                        return Err(de::Error::custom(format!("duplicate feature `{name}`")));
                    }
                    pairs.push((name, value));
                }
                FeatureVector::from_named(pairs.iter().map(|(n, v)| (n.as_str(), *v)))
                    .map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_map(NamedVisitor)
    }
}

/// Write the 48 values of a raw vector as a name → value JSON object, in
/// canonical order.
pub fn named_map(values: &[f64; FEATURE_COUNT]) -> NamedValues<'_> {
    NamedValues(values)
}

pub struct NamedValues<'a>(&'a [f64; FEATURE_COUNT]);

impl Serialize for NamedValues<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(FEATURE_COUNT))?;
        for (i, value) in self.0.iter().enumerate() {
            map.serialize_entry(FEATURE_NAMES[i], value)?;
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn cross_product_has_48_distinct_keys() {
        let keys: HashSet<_> = FeatureKey::all().collect();
        assert_eq!(keys.len(), 48);
        let names: HashSet<_> = FeatureKey::all().map(|k| k.name()).collect();
        assert_eq!(names.len(), 48);
    }

    #[test]
    fn names_follow_code_convention() {
        for key in FeatureKey::all() {
            let expected = format!("{}_{}", key.playtype.code(), key.metric.code());
            assert_eq!(key.name(), expected);
            assert_eq!(expected.parse::<FeatureKey>().unwrap(), key);
        }
        assert_eq!(FeatureKey::new(PlaytypeKind::SpotUp, MetricKind::FgPct).name(), "spotup_fg_pct");
    }

    #[test]
    fn flat_index_is_playtype_major() {
        let key = FeatureKey::new(PlaytypeKind::PostUp, MetricKind::TovFreq);
        assert_eq!(key.index(), 4 * 6 + 3);
        assert_eq!(FeatureKey::from_index(key.index()), Some(key));
        assert_eq!(FeatureKey::from_index(48), None);
    }

    #[test]
    fn excluded_playtypes_do_not_parse() {
        for name in ["putbacks_freq", "misc_freq", "handoff_freq"] {
            assert!(name.parse::<FeatureKey>().is_err());
        }
    }

    #[test]
    fn vector_validation() {
        let mut v = [0.1; FEATURE_COUNT];
        assert!(FeatureVector::new(v).is_ok());
        v[3] = 1.3;
        assert!(matches!(FeatureVector::new(v), Err(FeatureError::OutOfRange { .. })));
        v[3] = f64::NAN;
        assert!(matches!(FeatureVector::new(v), Err(FeatureError::NotFinite { .. })));
        let mut v = [0.0; FEATURE_COUNT];
        for k in FeatureKey::freq_keys() {
            v[k.index()] = 0.13;
        }
        assert!(matches!(FeatureVector::new(v), Err(FeatureError::FreqSumExceeded { .. })));
    }

    #[test]
    fn json_map_round_trip() {
        let mut v = [0.0; FEATURE_COUNT];
        for (i, x) in v.iter_mut().enumerate() {
            *x = i as f64 / 1000.0 + 0.001;
        }
        let fv = FeatureVector::new(v).unwrap();
        let text = serde_json::to_string(&fv).unwrap();
        assert!(text.starts_with("{\"iso_freq\":"));
        let back: FeatureVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, fv);
    }
}
