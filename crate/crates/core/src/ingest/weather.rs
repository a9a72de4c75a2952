use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{open_csv, parse_number, Header, LoadDiagnostics, Loaded, TimestampParser};
use crate::error::{Error, Result};
use crate::model::{WeatherRecord, WeatherSeries};

/// Column names of an hourly weather history export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherColumns {
    pub timestamp: String,
    pub temp: String,
    pub precip: String,
    pub timestamp_format: String,
    pub timezone: String,
}

impl Default for WeatherColumns {
    fn default() -> Self {
        Self {
            timestamp: "datetime".into(),
            temp: "temp".into(),
            precip: "precip".into(),
            timestamp_format: "%Y-%m-%dT%H:%M:%S".into(),
            timezone: "America/Chicago".into(),
        }
    }
}

pub fn truncate_to_hour(ts: NaiveDateTime) -> NaiveDateTime {
    ts.with_minute(0)
        .and_then(|t| t.with_second(0))
        .and_then(|t| t.with_nanosecond(0))
        .expect("hour truncation is always valid")
}

/// Records are truncated to the hour, sorted, and deduplicated with the
/// later row winning.
pub fn load_weather(path: &Path, cols: &WeatherColumns) -> Result<Loaded<WeatherSeries>> {
    let parser = TimestampParser::new(&cols.timestamp_format, &cols.timezone)?;
    let mut reader = open_csv(path)?;
    let header = Header::read(path, &mut reader)?;
    let ts_i = header.require(path, &cols.timestamp)?;
    let temp_i = header.require(path, &cols.temp)?;
    let precip_i = header.require(path, &cols.precip)?;

    let mut diag = LoadDiagnostics::default();
    let mut by_hour: BTreeMap<NaiveDateTime, WeatherRecord> = BTreeMap::new();
    for record in reader.records() {
        diag.raw_rows += 1;
        let parsed = record.ok().and_then(|r| {
            let ts = parser.parse(r.get(ts_i)?)?;
            let temp_f = parse_number(r.get(temp_i)?).ok()??;
            let precip_in = parse_number(r.get(precip_i)?).ok()?.unwrap_or(0.0);
            (precip_in >= 0.0).then(|| WeatherRecord {
                hour_ts: truncate_to_hour(ts),
                temp_f,
                precip_in,
            })
        });
        match parsed {
            Some(rec) => {
                if by_hour.insert(rec.hour_ts, rec).is_some() {
                    diag.duplicates_replaced += 1;
                }
            }
            None => diag.skipped_parse += 1,
        }
    }
    if by_hour.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    diag.loaded = by_hour.len();
    Ok(Loaded {
        value: WeatherSeries {
            records: by_hour.into_values().collect(),
        },
        diagnostics: diag,
    })
}
