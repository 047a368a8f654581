//! Download one season of team playtype statistics and translate it into
//! the canonical dataset CSV.
//!
//! The upstream stats service answers `GET {endpoint}/synergyplaytypes` once
//! per playtype and `GET {endpoint}/leaguedashteamstats` for the advanced
//! team table holding `OFF_RATING`. Each body is a JSON document of the form
//! `{"resultSets": [{"name": .., "headers": [..], "rowSet": [[..], ..]}]}`.

use std::collections::{BTreeMap, HashMap};
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::{serialize_dataset_csv, Dataset, TeamSeasonRow};
use crate::features::{FeatureKey, FeatureVector, MetricKind, PlaytypeKind, FEATURE_COUNT};

/// First season with playtype tracking.
pub const FIRST_TRACKED_SEASON: i32 = 2015;

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Additional attempts after the first failure.
    pub retries: u32,
    /// Delay before retry `i` is `backoff * 2^i`.
    pub backoff: Duration,
    /// Minimum spacing between consecutive requests.
    pub min_interval: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retries: 3,
            backoff: Duration::from_millis(500),
            min_interval: Duration::from_millis(600),
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("transport error after {attempts} attempts ({retries} retries): {message}")]
    Transport { attempts: u32, retries: u32, message: String },
    #[error("upstream returned HTTP {status} for {url}")]
    Status { status: u16, url: String },
    #[error("cannot translate upstream payload: {0}")]
    Translation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Upstream name of each modeled playtype.
fn upstream_playtype(p: PlaytypeKind) -> &'static str {
    match p {
        PlaytypeKind::Isolation => "Isolation",
        PlaytypeKind::Transition => "Transition",
        PlaytypeKind::PnrBallHandler => "PRBallHandler",
        PlaytypeKind::PnrRollMan => "PRRollman",
        PlaytypeKind::PostUp => "Postup",
        PlaytypeKind::SpotUp => "Spotup",
        PlaytypeKind::Cut => "Cut",
        PlaytypeKind::OffScreen => "OffScreen",
    }
}

/// Upstream column feeding each metric.
pub fn upstream_metric_column(m: MetricKind) -> &'static str {
    match m {
        MetricKind::Freq => "POSS_PCT",
        MetricKind::FgPct => "FG_PCT",
        MetricKind::FtFreq => "FT_POSS_PCT",
        MetricKind::TovFreq => "TOV_POSS_PCT",
        MetricKind::AndOneFreq => "PLUSONE_POSS_PCT",
        MetricKind::ScoreFreq => "SCORE_POSS_PCT",
    }
}

fn parse_season(season: &str) -> Result<i32, FetchError> {
    let bad = || FetchError::Argument(format!("season `{season}` is not of the form YYYY-YY"));
    let (start, end) = season.split_once('-').ok_or_else(bad)?;
    if start.len() != 4 || end.len() != 2 {
        return Err(bad());
    }
    let start: i32 = start.parse().map_err(|_| bad())?;
    let end: i32 = end.parse().map_err(|_| bad())?;
    if (start + 1) % 100 != end {
        return Err(bad());
    }
    Ok(start)
}

fn encode(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for b in value.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

fn url_with_query(base: &str, path: &str, params: &[(&str, &str)]) -> String {
    let query: Vec<String> = params.iter().map(|(k, v)| format!("{k}={}", encode(v))).collect();
    format!("{}/{path}?{}", base.trim_end_matches('/'), query.join("&"))
}

#[derive(Debug, Deserialize)]
struct ResultSet {
    headers: Vec<String>,
    #[serde(rename = "rowSet")]
    row_set: Vec<Vec<Value>>,
}

/// A decoded table: column name → position, plus rows.
struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn parse(body: &[u8], what: &str) -> Result<Self, FetchError> {
        let doc: Value = serde_json::from_slice(body)
            .map_err(|e| FetchError::Translation(format!("{what}: body is not JSON: {e}")))?;
        let set = doc
            .get("resultSets")
            .and_then(|s| s.get(0))
            .or_else(|| doc.get("resultSet"))
            .ok_or_else(|| FetchError::Translation(format!("{what}: no result set in payload")))?;
        let set: ResultSet = serde_json::from_value(set.clone())
            .map_err(|e| FetchError::Translation(format!("{what}: unexpected result set shape: {e}")))?;
        let columns = set.headers.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect();
        Ok(Self { columns, rows: set.row_set })
    }

    fn cell<'a>(&self, row: &'a [Value], column: &str, what: &str) -> Result<&'a Value, FetchError> {
        let idx = *self
            .columns
            .get(column)
            .ok_or_else(|| FetchError::Translation(format!("{what}: missing column {column}")))?;
        row.get(idx)
            .ok_or_else(|| FetchError::Translation(format!("{what}: short row lacks column {column}")))
    }

    fn number(&self, row: &[Value], column: &str, what: &str) -> Result<f64, FetchError> {
        self.cell(row, column, what)?
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| FetchError::Translation(format!("{what}: column {column} is not a number")))
    }

    fn team_id(&self, row: &[Value], what: &str) -> Result<i64, FetchError> {
        let v = self.cell(row, "TEAM_ID", what)?;
        v.as_i64()
            .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
            .ok_or_else(|| FetchError::Translation(format!("{what}: TEAM_ID is not an integer")))
    }
}

struct Requester {
    client: reqwest::blocking::Client,
    policy: RetryPolicy,
    last_request: Option<Instant>,
}

impl Requester {
    fn get(&mut self, url: &str) -> Result<Vec<u8>, FetchError> {
        let mut attempt: u32 = 0;
        loop {
            if let Some(last) = self.last_request {
                let since = last.elapsed();
                if since < self.policy.min_interval {
                    thread::sleep(self.policy.min_interval - since);
                }
            }
            self.last_request = Some(Instant::now());
            attempt += 1;
            let outcome = self
                .client
                .get(url)
                .header("Accept", "application/json")
                .header("Referer", "https://www.nba.com/")
                .header("Origin", "https://www.nba.com")
                .send();
            match outcome {
                Ok(resp) if resp.status().is_success() => {
                    return resp.bytes().map(|b| b.to_vec()).map_err(|e| FetchError::Transport {
                        attempts: attempt,
                        retries: self.policy.retries,
                        message: e.to_string(),
                    });
                }
                Ok(resp) => {
                    let status = resp.status();
                    if !(status.is_server_error() || status.as_u16() == 429) || attempt > self.policy.retries {
                        return Err(FetchError::Status {
                            status: status.as_u16(),
                            url: url.to_string(),
                        });
                    }
                }
                Err(e) => {
                    if attempt > self.policy.retries {
                        return Err(FetchError::Transport {
                            attempts: attempt,
                            retries: self.policy.retries,
                            message: e.to_string(),
                        });
                    }
                }
            }
            thread::sleep(self.policy.backoff.saturating_mul(1 << (attempt - 1).min(16)));
        }
    }
}

/// Fetch one season and return it in the canonical CSV layout, one row per
/// team sorted by team code. Nothing is returned unless every request and
/// the translation succeed.
pub fn fetch_playtype_stats(endpoint: &str, season: &str, policy: &RetryPolicy) -> Result<Vec<u8>, FetchError> {
    let start = parse_season(season)?;
    if start < FIRST_TRACKED_SEASON {
        return Err(FetchError::Translation(format!(
            "season {season} predates playtype tracking (first tracked season is {FIRST_TRACKED_SEASON}-{:02})",
            (FIRST_TRACKED_SEASON + 1) % 100
        )));
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(policy.timeout)
        .user_agent("ortg-lab/0.1")
        .build()
        .map_err(|e| FetchError::Argument(format!("cannot build HTTP client: {e}")))?;
    let mut requester = Requester {
        client,
        policy: policy.clone(),
        last_request: None,
    };

    let mut abbreviations: BTreeMap<i64, String> = BTreeMap::new();
    let mut values: HashMap<i64, [Option<f64>; FEATURE_COUNT]> = HashMap::new();
    for playtype in PlaytypeKind::ALL {
        let url = url_with_query(
            endpoint,
            "synergyplaytypes",
            &[
                ("LeagueID", "00"),
                ("PerMode", "Totals"),
                ("PlayType", upstream_playtype(playtype)),
                ("PlayerOrTeam", "T"),
                ("SeasonType", "Regular Season"),
                ("SeasonYear", season),
                ("TypeGrouping", "offensive"),
            ],
        );
        let body = requester.get(&url)?;
        let what = format!("{} playtype table", upstream_playtype(playtype));
        let table = Table::parse(&body, &what)?;
        if table.rows.is_empty() {
            return Err(FetchError::Translation(format!("{what}: no rows for season {season}")));
        }
        for row in &table.rows {
            let id = table.team_id(row, &what)?;
            let abbr = table
                .cell(row, "TEAM_ABBREVIATION", &what)?
                .as_str()
                .ok_or_else(|| FetchError::Translation(format!("{what}: TEAM_ABBREVIATION is not text")))?;
            abbreviations.entry(id).or_insert_with(|| abbr.to_string());
            let slot = values.entry(id).or_insert([None; FEATURE_COUNT]);
            for metric in MetricKind::ALL {
                let key = FeatureKey::new(playtype, metric);
                slot[key.index()] = Some(table.number(row, upstream_metric_column(metric), &what)?);
            }
        }
    }

    let url = url_with_query(
        endpoint,
        "leaguedashteamstats",
        &[
            ("LeagueID", "00"),
            ("MeasureType", "Advanced"),
            ("PerMode", "Totals"),
            ("Season", season),
            ("SeasonType", "Regular Season"),
        ],
    );
    let body = requester.get(&url)?;
    let what = "advanced team table";
    let table = Table::parse(&body, what)?;
    let mut ortg: HashMap<i64, f64> = HashMap::new();
    for row in &table.rows {
        ortg.insert(table.team_id(row, what)?, table.number(row, "OFF_RATING", what)?);
    }

    let mut rows = Vec::with_capacity(abbreviations.len());
    for (id, abbr) in &abbreviations {
        let slot = &values[id];
        let mut x = [0.0; FEATURE_COUNT];
        for key in FeatureKey::all() {
            x[key.index()] = slot[key.index()].ok_or_else(|| {
                FetchError::Translation(format!("team {abbr} has no {} row", upstream_playtype(key.playtype)))
            })?;
        }
        let features =
            FeatureVector::new(x).map_err(|e| FetchError::Translation(format!("team {abbr}: {e}")))?;
        let team_ortg = *ortg
            .get(id)
            .ok_or_else(|| FetchError::Translation(format!("team {abbr} missing from advanced team table")))?;
        let row = TeamSeasonRow::new(season, abbr.as_str(), team_ortg, features)
            .map_err(|e| FetchError::Translation(e.to_string()))?;
        rows.push(row);
    }
    rows.sort_by(|a, b| a.team.cmp(&b.team));
    let data = Dataset::new(rows).map_err(|e| FetchError::Translation(e.to_string()))?;
    Ok(serialize_dataset_csv(&data).into_bytes())
}
