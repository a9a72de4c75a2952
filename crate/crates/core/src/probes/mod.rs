//! Probe artifacts: serializable payloads behind each interactive view.
//!
//! Every artifact is a versioned document (`probe/1`) carrying its payload
//! and provenance. Personal-data gaps are explicit markers, never zeros.

mod animation;
mod verify;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metrics::{
    all_linked_dropoff_stats, daily_stats, hourly_stats, neighborhood_stats, weekday_stats,
    DayStat, HourlyStat, MetricOptions, NeighborhoodMap, TripEnd, WeekdayStat,
};
use crate::model::{NeighborhoodSet, Trip};
use crate::planner::{PlannerInput, PlannerOptions};
use crate::time::{DateRange, Day, DayStartOffset};

pub use animation::{
    build_animation_probe, latest_ping_date, ping_dates, AnimationFrame, AnimationProbe,
    DEFAULT_FRAME_STEP_S, MAX_INTERPOLATION_GAP_S,
};
pub use verify::{verify_probes, CellCheck, VerifyReport};

pub const PROBE_SCHEMA: &str = "probe/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Hourly,
    Calendar,
    Map,
    Animation,
    PlannerDefaults,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 5] = [
        ProbeKind::Hourly,
        ProbeKind::Calendar,
        ProbeKind::Map,
        ProbeKind::Animation,
        ProbeKind::PlannerDefaults,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::Hourly => "hourly",
            ProbeKind::Calendar => "calendar",
            ProbeKind::Map => "map",
            ProbeKind::Animation => "animation",
            ProbeKind::PlannerDefaults => "planner_defaults",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.json", self.as_str())
    }

    pub fn parse(s: &str) -> Option<ProbeKind> {
        ProbeKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Personal,
    City,
    Both,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProbeMeta {
    pub data_range: Option<DateRange>,
    /// Hash of the store manifest the probe was built from.
    pub store_hash: Option<String>,
    pub row_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbePayload {
    Hourly(HourlyProbe),
    Calendar(CalendarProbe),
    Map(MapProbe),
    Animation(AnimationProbe),
    PlannerDefaults(PlannerDefaultsProbe),
}

impl ProbePayload {
    pub fn kind(&self) -> ProbeKind {
        match self {
            ProbePayload::Hourly(_) => ProbeKind::Hourly,
            ProbePayload::Calendar(_) => ProbeKind::Calendar,
            ProbePayload::Map(_) => ProbeKind::Map,
            ProbePayload::Animation(_) => ProbeKind::Animation,
            ProbePayload::PlannerDefaults(_) => ProbeKind::PlannerDefaults,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeArtifact {
    pub schema: String,
    pub kind: ProbeKind,
    pub scope: Scope,
    pub meta: ProbeMeta,
    pub payload: ProbePayload,
}

impl ProbeArtifact {
    fn new(scope: Scope, meta: ProbeMeta, payload: ProbePayload) -> Self {
        Self {
            schema: PROBE_SCHEMA.to_string(),
            kind: payload.kind(),
            scope,
            meta,
            payload,
        }
    }

    pub fn with_store_hash(mut self, hash: impl Into<String>) -> Self {
        self.meta.store_hash = Some(hash.into());
        self
    }
}

fn date_span(trips: &[&[Trip]], offset: DayStartOffset) -> Option<DateRange> {
    let dates = trips
        .iter()
        .flat_map(|ts| ts.iter())
        .map(|t| offset.service_date(t.start_ts));
    let (mut lo, mut hi): (Option<NaiveDate>, Option<NaiveDate>) = (None, None);
    for d in dates {
        lo = Some(lo.map_or(d, |l| l.min(d)));
        hi = Some(hi.map_or(d, |h| h.max(d)));
    }
    Some(DateRange {
        start: lo?,
        end: hi?,
    })
}

fn counts(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyProbe {
    pub day_start_offset: DayStartOffset,
    pub personal: Vec<HourlyStat>,
    pub city: Vec<HourlyStat>,
    /// Wall-clock hours with no personal trips: unobserved, not zero.
    pub personal_gaps: Vec<u8>,
    pub city_gaps: Vec<u8>,
}

fn gaps(series: &[HourlyStat]) -> Vec<u8> {
    series
        .iter()
        .filter(|s| s.trip_count == 0)
        .map(|s| s.hour)
        .collect()
}

pub fn build_hourly_probe(personal: &[Trip], city: &[Trip], opts: &MetricOptions) -> ProbeArtifact {
    let personal_series = hourly_stats(personal, opts);
    let city_series = hourly_stats(city, opts);
    if personal.is_empty() {
        log::warn!("hourly probe: personal corpus is empty, every hour is a gap");
    }
    if city.is_empty() {
        log::warn!("hourly probe: city corpus is empty");
    }
    let payload = HourlyProbe {
        day_start_offset: opts.day_start_offset,
        personal_gaps: gaps(&personal_series),
        city_gaps: gaps(&city_series),
        personal: personal_series,
        city: city_series,
    };
    let meta = ProbeMeta {
        data_range: date_span(&[personal, city], opts.day_start_offset),
        store_hash: None,
        row_counts: counts(&[
            ("personal_trips", personal.len()),
            ("city_trips", city.len()),
        ]),
    };
    ProbeArtifact::new(Scope::Both, meta, ProbePayload::Hourly(payload))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalendarCell {
    pub date: NaiveDate,
    pub weekday: Day,
    /// Absent when the driver has no trips that day.
    pub stat: Option<DayStat>,
}

pub const WEEKLY_VARIABLES: [&str; 4] = [
    "total_trips",
    "avg_fare",
    "avg_duration_min",
    "fare_per_minute",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyMatrix {
    pub variables: Vec<String>,
    pub personal: Vec<WeekdayStat>,
    pub city: Vec<WeekdayStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalendarProbe {
    pub range: DateRange,
    pub n_shades: u8,
    pub day_start_offset: DayStartOffset,
    /// One cell per date in `range`, personal data only.
    pub month: Vec<CalendarCell>,
    pub week: WeeklyMatrix,
}

pub fn build_calendar_probe(
    personal: &[Trip],
    city: &[Trip],
    range: DateRange,
    n_shades: u8,
    opts: &MetricOptions,
) -> Result<ProbeArtifact> {
    let days = daily_stats(personal, range, n_shades, opts)?;
    let month = range
        .days()
        .map(|date| CalendarCell {
            date,
            weekday: Day::from(date.weekday()),
            stat: days.get(&date).cloned(),
        })
        .collect();
    let personal_in_range = personal
        .iter()
        .filter(|t| range.contains(opts.day_start_offset.service_date(t.start_ts)))
        .count();
    let payload = CalendarProbe {
        range,
        n_shades,
        day_start_offset: opts.day_start_offset,
        month,
        week: WeeklyMatrix {
            variables: WEEKLY_VARIABLES.iter().map(|s| s.to_string()).collect(),
            personal: weekday_stats(personal, opts),
            city: weekday_stats(city, opts),
        },
    };
    let meta = ProbeMeta {
        data_range: Some(range),
        store_hash: None,
        row_counts: counts(&[
            ("personal_trips", personal.len()),
            ("personal_trips_in_range", personal_in_range),
            ("city_trips", city.len()),
        ]),
    };
    Ok(ProbeArtifact::new(
        Scope::Both,
        meta,
        ProbePayload::Calendar(payload),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGeometry {
    pub name: String,
    pub rings: Vec<Vec<[f64; 2]>>,
}

/// Pickup map, unfiltered drop-off map, and the drop-off map for every
/// pickup neighborhood present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapLayer {
    pub pickup: NeighborhoodMap,
    pub dropoff: NeighborhoodMap,
    pub linked_dropoff: BTreeMap<String, NeighborhoodMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapProbe {
    pub n_shades: u8,
    pub geometry: BTreeMap<String, MapGeometry>,
    pub personal: MapLayer,
    pub city: MapLayer,
}

fn map_layer(trips: &[Trip], n_shades: u8, opts: &MetricOptions) -> Result<MapLayer> {
    Ok(MapLayer {
        pickup: neighborhood_stats(trips, TripEnd::Pickup, n_shades, opts)?,
        dropoff: neighborhood_stats(trips, TripEnd::Dropoff, n_shades, opts)?,
        linked_dropoff: all_linked_dropoff_stats(trips, n_shades, opts)?,
    })
}

pub fn build_map_probe(
    personal: &[Trip],
    city: &[Trip],
    boundaries: &NeighborhoodSet,
    n_shades: u8,
    opts: &MetricOptions,
) -> Result<ProbeArtifact> {
    let (personal_layer, city_layer) = rayon::join(
        || map_layer(personal, n_shades, opts),
        || map_layer(city, n_shades, opts),
    );
    let geometry = boundaries
        .entries
        .iter()
        .map(|n| {
            (
                n.id.clone(),
                MapGeometry {
                    name: n.name.clone(),
                    rings: n.rings.clone(),
                },
            )
        })
        .collect();
    let payload = MapProbe {
        n_shades,
        geometry,
        personal: personal_layer?,
        city: city_layer?,
    };
    let meta = ProbeMeta {
        data_range: date_span(&[personal, city], opts.day_start_offset),
        store_hash: None,
        row_counts: counts(&[
            ("personal_trips", personal.len()),
            ("city_trips", city.len()),
            ("neighborhoods", boundaries.len()),
        ]),
    };
    Ok(ProbeArtifact::new(
        Scope::Both,
        meta,
        ProbePayload::Map(payload),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodOption {
    pub id: String,
    pub name: String,
}

/// Everything the planner form needs to start from sensible values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerDefaultsProbe {
    pub defaults: PlannerInput,
    pub options: PlannerOptions,
    pub neighborhoods: Vec<NeighborhoodOption>,
    pub city_trips: usize,
}

pub fn build_planner_defaults_probe(
    city: &[Trip],
    boundaries: &NeighborhoodSet,
    defaults: PlannerInput,
    options: PlannerOptions,
) -> ProbeArtifact {
    let payload = PlannerDefaultsProbe {
        defaults,
        options,
        neighborhoods: boundaries
            .entries
            .iter()
            .map(|n| NeighborhoodOption {
                id: n.id.clone(),
                name: n.name.clone(),
            })
            .collect(),
        city_trips: city.len(),
    };
    let meta = ProbeMeta {
        data_range: date_span(&[city], options.day_start_offset),
        store_hash: None,
        row_counts: counts(&[("city_trips", city.len())]),
    };
    ProbeArtifact::new(Scope::City, meta, ProbePayload::PlannerDefaults(payload))
}

/// Canonical serialized bytes of an artifact (stable key order).
pub fn probe_bytes(artifact: &ProbeArtifact) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(artifact).map_err(|source| Error::Json {
        path: artifact.kind.file_name().into(),
        source,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn export_probe(artifact: &ProbeArtifact, path: &Path) -> Result<()> {
    let bytes = probe_bytes(artifact)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn parse_probe(bytes: &[u8], origin: &Path) -> Result<ProbeArtifact> {
    let json_err = |source| Error::Json {
        path: origin.to_path_buf(),
        source,
    };
    let doc: Value = serde_json::from_slice(bytes).map_err(json_err)?;
    let found = doc
        .get("schema")
        .and_then(Value::as_str)
        .unwrap_or("<missing>");
    if found != PROBE_SCHEMA {
        return Err(Error::Version {
            found: found.to_string(),
            expected: PROBE_SCHEMA.to_string(),
        });
    }
    let artifact: ProbeArtifact = serde_json::from_value(doc).map_err(json_err)?;
    if artifact.kind != artifact.payload.kind() {
        return Err(Error::Precondition(format!(
            "{}: kind `{}` does not match payload `{}`",
            origin.display(),
            artifact.kind.as_str(),
            artifact.payload.kind().as_str()
        )));
    }
    Ok(artifact)
}

pub fn import_probe(path: &Path) -> Result<ProbeArtifact> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_probe(&bytes, path)
}
