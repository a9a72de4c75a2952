//! Canonical domain types shared by every stage of the pipeline.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

/// A geographic point in degrees, stored latitude first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Personal,
    City,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Personal => "personal",
            Source::City => "city",
        }
    }
}

/// Hourly conditions attached to a trip after weather enrichment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherObs {
    pub temp_f: f64,
    pub precip_in: f64,
}

/// One completed ride. Timestamps are local wall-clock time in the
/// configured city timezone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub trip_id: String,
    pub start_ts: NaiveDateTime,
    pub end_ts: NaiveDateTime,
    pub duration_s: f64,
    pub miles: f64,
    pub fare: f64,
    pub tip: f64,
    pub additional_charges: f64,
    pub total: f64,
    pub pickup_point: Option<LatLon>,
    pub dropoff_point: Option<LatLon>,
    pub pickup_area: Option<String>,
    pub dropoff_area: Option<String>,
    pub source: Source,
    /// Shared/pooled ride authorization as published by the city. Retained,
    /// never filtered on.
    pub shared: bool,
    pub weather: Option<WeatherObs>,
}

impl Trip {
    pub fn duration_min(&self) -> f64 {
        self.duration_s / 60.0
    }
}

/// One official neighborhood. Rings are closed `(lon, lat)` sequences; a
/// multi-polygon or a polygon with holes contributes several rings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub id: String,
    pub name: String,
    pub rings: Vec<Vec<[f64; 2]>>,
}

/// Entries are kept sorted by ascending id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NeighborhoodSet {
    pub entries: Vec<Neighborhood>,
}

impl NeighborhoodSet {
    pub fn new(mut entries: Vec<Neighborhood>) -> Self {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Neighborhood> {
        self.entries
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub hour_ts: NaiveDateTime,
    pub temp_f: f64,
    pub precip_in: f64,
}

/// Hourly records with strictly increasing `hour_ts`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeatherSeries {
    pub records: Vec<WeatherRecord>,
}

impl WeatherSeries {
    pub fn lookup(&self, hour_ts: NaiveDateTime) -> Option<&WeatherRecord> {
        self.records
            .binary_search_by(|r| r.hour_ts.cmp(&hour_ts))
            .ok()
            .map(|i| &self.records[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ping {
    pub ts: NaiveDateTime,
    pub point: LatLon,
}

/// Location history with non-decreasing timestamps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PingSeries {
    pub pings: Vec<Ping>,
}
