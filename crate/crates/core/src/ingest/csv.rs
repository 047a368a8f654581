use std::fmt::Write as _;
use std::io::Read;

use super::{Dataset, IngestError, TeamSeasonRow};
use crate::features::{FeatureError, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};

/// `season`, `team`, `ortg`, then the 48 features.
pub const COLUMN_COUNT: usize = 3 + FEATURE_COUNT;

pub fn csv_header() -> Vec<&'static str> {
    let mut cols = vec!["season", "team", "ortg"];
    cols.extend_from_slice(&FEATURE_NAMES);
    cols
}

fn check_header(found: &::csv::StringRecord) -> Result<(), IngestError> {
    let expected = csv_header();
    for (i, name) in expected.iter().enumerate() {
        match found.get(i) {
            None => return Err(IngestError::Schema(format!("missing column `{name}`"))),
            Some(col) if col.trim() != *name => {
                return Err(IngestError::Schema(format!(
                    "expected column `{name}` at position {}, found `{}`",
                    i + 1,
                    col.trim()
                )))
            }
            Some(_) => {}
        }
    }
    if let Some(extra) = found.get(expected.len()) {
        return Err(IngestError::Schema(format!("unexpected column `{}`", extra.trim())));
    }
    Ok(())
}

fn check_label(what: &str, value: &str, line: u64) -> Result<(), IngestError> {
    if value.is_empty() || value.contains([',', '"', '\n', '\r']) {
        return Err(IngestError::Row {
            line,
            message: format!("invalid {what} label `{value}`"),
        });
    }
    Ok(())
}

fn parse_number(cell: &str, column: &str, line: u64) -> Result<f64, IngestError> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::Row {
            line,
            message: format!("column `{column}`: `{cell}` is not a finite number"),
        }),
    }
}

/// Parse a dataset in the canonical 51-column CSV layout. Row order follows
/// the file; every row is validated and errors cite the 1-based file line.
pub fn parse_dataset_csv<R: Read>(source: R) -> Result<Dataset, IngestError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(IngestError::Schema("missing header row".into())),
        Some(r) => r.map_err(csv_error)?,
    };
    check_header(&header)?;

    let mut rows: Vec<TeamSeasonRow> = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != COLUMN_COUNT {
            return Err(IngestError::Row {
                line,
                message: format!("expected {COLUMN_COUNT} fields, found {}", record.len()),
            });
        }
        let season = record[0].trim().to_string();
        let team = record[1].trim().to_string();
        check_label("season", &season, line)?;
        check_label("team", &team, line)?;
        let ortg = parse_number(&record[2], "ortg", line)?;
        if ortg <= 0.0 {
            return Err(IngestError::Row {
                line,
                message: format!("ortg must be positive, got {ortg}"),
            });
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (i, value) in values.iter_mut().enumerate() {
            *value = parse_number(&record[3 + i], FEATURE_NAMES[i], line)?;
        }
        let features = FeatureVector::new(values).map_err(|e| IngestError::Row {
            line,
            message: match e {
                FeatureError::OutOfRange { key, value } => {
                    format!("column `{key}`: {value} is outside [0, 1]")
                }
                other => other.to_string(),
            },
        })?;
        if rows.iter().any(|r| r.season == season && r.team == team) {
            return Err(IngestError::Row {
                line,
                message: format!("duplicate row for season {season}, team {team}"),
            });
        }
        rows.push(TeamSeasonRow {
            season,
            team,
            ortg,
            features,
        });
    }
    Dataset::new(rows)
}

fn csv_error(e: ::csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        ::csv::ErrorKind::Io(io) => IngestError::Io(io),
        ::csv::ErrorKind::Utf8 { err, .. } => IngestError::Row {
            line,
            message: format!("invalid UTF-8: {err}"),
        },
        other => IngestError::Row {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Canonical CSV rendering: header row, comma delimiter, `\n` line endings,
/// numbers in shortest round-trip decimal form.
pub fn serialize_dataset_csv(data: &Dataset) -> String {
    let mut out = csv_header().join(",");
    out.push('\n');
    for row in data.rows() {
        write!(out, "{},{},{}", row.season, row.team, row.ortg).unwrap();
        for v in row.features.values() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
