//! File-based loaders for the external data sources.
//!
//! Every loader is a pure function of its input file. Malformed rows are
//! skipped and tallied in [`LoadDiagnostics`] instead of failing the load.

mod boundaries;
mod pings;
mod trips;
mod weather;

use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use boundaries::{load_boundaries, load_boundaries_with, slugify, BoundaryOptions};
pub use pings::{load_location_pings, PING_WINDOW_DAYS};
pub use trips::{load_city_trips, load_personal_trips};
pub use weather::{load_weather, truncate_to_hour, WeatherColumns};

/// Row accounting for one loaded file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoadDiagnostics {
    pub raw_rows: usize,
    pub loaded: usize,
    /// Rows that failed numeric, timestamp or record-structure parsing.
    pub skipped_parse: usize,
    /// City rows with neither a pickup point nor a pickup area.
    pub skipped_no_location: usize,
    pub excluded_by_month: usize,
    /// Rows whose status column is not a completed status.
    pub excluded_by_status: usize,
    /// Pings outside the trailing export window.
    pub dropped_by_window: usize,
    /// Duplicate keys collapsed (last row wins).
    pub duplicates_replaced: usize,
}

impl LoadDiagnostics {
    pub fn skipped(&self) -> usize {
        self.skipped_parse + self.skipped_no_location
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub value: T,
    pub diagnostics: LoadDiagnostics,
}

/// Mapping from canonical field names to source column names.
///
/// Trip loaders need `start_ts`, `fare` and one of `duration_s`/`end_ts`;
/// the ping loader needs `ts`, `lat` and `lon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trip_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_ts: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_ts: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miles: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fare: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tip: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additional_charges: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pickup_lat: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pickup_lon: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropoff_lat: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropoff_lon: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pickup_area: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropoff_area: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    /// Status values (case-insensitive) that mark a completed trip.
    pub completed_status: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shared: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ts: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lat: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lon: Option<String>,
    /// chrono format string. Formats containing `%z` are converted from the
    /// embedded offset into `timezone`; others are read as local wall-clock.
    pub timestamp_format: String,
    pub timezone: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            trip_id: None,
            start_ts: None,
            end_ts: None,
            duration_s: None,
            miles: None,
            fare: None,
            tip: None,
            additional_charges: None,
            total: None,
            pickup_lat: None,
            pickup_lon: None,
            dropoff_lat: None,
            dropoff_lon: None,
            pickup_area: None,
            dropoff_area: None,
            status: None,
            completed_status: vec!["completed".into()],
            shared: None,
            ts: None,
            lat: None,
            lon: None,
            timestamp_format: "%Y-%m-%d %H:%M:%S".into(),
            timezone: "America/Chicago".into(),
        }
    }
}

fn col(name: &str) -> Option<String> {
    Some(name.to_string())
}

impl ColumnMap {
    /// Chicago Transportation Network Providers trips schema.
    pub fn chicago_tnp() -> Self {
        Self {
            trip_id: col("Trip ID"),
            start_ts: col("Trip Start Timestamp"),
            end_ts: col("Trip End Timestamp"),
            duration_s: col("Trip Seconds"),
            miles: col("Trip Miles"),
            fare: col("Fare"),
            tip: col("Tip"),
            additional_charges: col("Additional Charges"),
            total: col("Trip Total"),
            pickup_lat: col("Pickup Centroid Latitude"),
            pickup_lon: col("Pickup Centroid Longitude"),
            dropoff_lat: col("Dropoff Centroid Latitude"),
            dropoff_lon: col("Dropoff Centroid Longitude"),
            shared: col("Shared Trip Authorized"),
            timestamp_format: "%m/%d/%Y %I:%M:%S %p".into(),
            ..Self::default()
        }
    }

    /// Best-effort mapping of a driver's personal trip export. Column names
    /// in real exports vary by platform and year; override in config.
    pub fn personal_export() -> Self {
        Self {
            trip_id: col("Trip UUID"),
            start_ts: col("Begin Trip Time"),
            end_ts: col("Dropoff Time"),
            miles: col("Distance (miles)"),
            fare: col("Fare"),
            tip: col("Tip"),
            pickup_lat: col("Begin Trip Lat"),
            pickup_lon: col("Begin Trip Lng"),
            dropoff_lat: col("Dropoff Lat"),
            dropoff_lon: col("Dropoff Lng"),
            status: col("Status"),
            ..Self::default()
        }
    }

    /// Best-effort mapping of a personal location-history export.
    pub fn personal_pings() -> Self {
        Self {
            ts: col("Timestamp"),
            lat: col("Latitude"),
            lon: col("Longitude"),
            ..Self::default()
        }
    }

    pub fn validate_for_trips(&self) -> Result<()> {
        let mut missing = Vec::new();
        if self.start_ts.is_none() {
            missing.push("start_ts");
        }
        if self.fare.is_none() {
            missing.push("fare");
        }
        if self.duration_s.is_none() && self.end_ts.is_none() {
            missing.push("duration_s or end_ts");
        }
        if self.pickup_lat.is_some() != self.pickup_lon.is_some() {
            missing.push("pickup_lat and pickup_lon together");
        }
        if self.dropoff_lat.is_some() != self.dropoff_lon.is_some() {
            missing.push("dropoff_lat and dropoff_lon together");
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "column map lacks mandatory fields: {}",
                missing.join(", ")
            )))
        }
    }

    pub fn validate_for_pings(&self) -> Result<()> {
        if self.ts.is_none() || self.lat.is_none() || self.lon.is_none() {
            return Err(Error::Config(
                "ping column map needs `ts`, `lat` and `lon`".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn timestamp_parser(&self) -> Result<TimestampParser> {
        TimestampParser::new(&self.timestamp_format, &self.timezone)
    }
}

/// Checks that `timezone` is a known IANA zone name.
pub fn validate_timezone(timezone: &str) -> Result<()> {
    timezone
        .parse::<Tz>()
        .map(|_| ())
        .map_err(|_| Error::Config(format!("unknown timezone `{timezone}`")))
}

/// Parses source timestamps into local wall-clock time.
#[derive(Debug, Clone)]
pub(crate) struct TimestampParser {
    format: String,
    tz: Tz,
    has_offset: bool,
}

impl TimestampParser {
    pub(crate) fn new(format: &str, timezone: &str) -> Result<Self> {
        let tz: Tz = timezone
            .parse()
            .map_err(|_| Error::Config(format!("unknown timezone `{timezone}`")))?;
        Ok(Self {
            format: format.to_string(),
            tz,
            has_offset: format.contains("%z") || format.contains("%:z") || format.contains("%#z"),
        })
    }

    pub(crate) fn parse(&self, raw: &str) -> Option<NaiveDateTime> {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        if self.has_offset {
            DateTime::parse_from_str(raw, &self.format)
                .ok()
                .map(|dt| dt.with_timezone(&self.tz).naive_local())
        } else {
            NaiveDateTime::parse_from_str(raw, &self.format).ok()
        }
    }
}

/// Resolved header positions for a delimited file.
pub(crate) struct Header {
    names: Vec<String>,
}

impl Header {
    pub(crate) fn read(path: &Path, reader: &mut csv::Reader<std::fs::File>) -> Result<Self> {
        let names = reader
            .headers()
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?
            .iter()
            .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
            .collect();
        Ok(Self { names })
    }

    pub(crate) fn require(&self, path: &Path, column: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: column.to_string(),
            })
    }

    pub(crate) fn optional(&self, path: &Path, column: Option<&String>) -> Result<Option<usize>> {
        column.map(|c| self.require(path, c)).transpose()
    }
}

pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Numeric cell. `Ok(None)` for blank cells, `Err(())` for garbage.
pub(crate) fn parse_number(raw: &str) -> std::result::Result<Option<f64>, ()> {
    let cleaned: String = raw
        .trim()
        .chars()
        .filter(|c| *c != ',' && *c != '$')
        .collect();
    if cleaned.is_empty() {
        return Ok(None);
    }
    match cleaned.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(()),
    }
}

pub(crate) fn cell(record: &csv::StringRecord, idx: Option<usize>) -> Option<&str> {
    idx.and_then(|i| record.get(i))
}
