use std::path::Path;

use chrono::Duration;
use log::warn;

use super::{
    cell, open_csv, parse_number, ColumnMap, Header, LoadDiagnostics, Loaded, TimestampParser,
};
use crate::error::{Error, Result};
use crate::model::{LatLon, Source, Trip};
use crate::time::YearMonth;

pub fn load_city_trips(
    path: &Path,
    map: &ColumnMap,
    month: Option<YearMonth>,
) -> Result<Loaded<Vec<Trip>>> {
    load_trips(path, map, Source::City, month)
}

/// Personal exports are never month-filtered. Rows without coordinates are
/// kept with their points absent.
pub fn load_personal_trips(path: &Path, map: &ColumnMap) -> Result<Loaded<Vec<Trip>>> {
    load_trips(path, map, Source::Personal, None)
}

struct Columns {
    trip_id: Option<usize>,
    start_ts: usize,
    end_ts: Option<usize>,
    duration_s: Option<usize>,
    miles: Option<usize>,
    fare: usize,
    tip: Option<usize>,
    additional_charges: Option<usize>,
    total: Option<usize>,
    pickup: Option<(usize, usize)>,
    dropoff: Option<(usize, usize)>,
    pickup_area: Option<usize>,
    dropoff_area: Option<usize>,
    status: Option<usize>,
    shared: Option<usize>,
}

impl Columns {
    fn resolve(path: &Path, header: &Header, map: &ColumnMap) -> Result<Self> {
        let pair = |lat: &Option<String>, lon: &Option<String>| -> Result<Option<(usize, usize)>> {
            Ok(
                match (
                    header.optional(path, lat.as_ref())?,
                    header.optional(path, lon.as_ref())?,
                ) {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => None,
                },
            )
        };
        Ok(Self {
            trip_id: header.optional(path, map.trip_id.as_ref())?,
            start_ts: header.require(path, map.start_ts.as_deref().unwrap_or_default())?,
            end_ts: header.optional(path, map.end_ts.as_ref())?,
            duration_s: header.optional(path, map.duration_s.as_ref())?,
            miles: header.optional(path, map.miles.as_ref())?,
            fare: header.require(path, map.fare.as_deref().unwrap_or_default())?,
            tip: header.optional(path, map.tip.as_ref())?,
            additional_charges: header.optional(path, map.additional_charges.as_ref())?,
            total: header.optional(path, map.total.as_ref())?,
            pickup: pair(&map.pickup_lat, &map.pickup_lon)?,
            dropoff: pair(&map.dropoff_lat, &map.dropoff_lon)?,
            pickup_area: header.optional(path, map.pickup_area.as_ref())?,
            dropoff_area: header.optional(path, map.dropoff_area.as_ref())?,
            status: header.optional(path, map.status.as_ref())?,
            shared: header.optional(path, map.shared.as_ref())?,
        })
    }
}

enum RowOutcome {
    Trip(Box<Trip>),
    Parse,
    NoLocation,
    Status,
    Month,
}

fn load_trips(
    path: &Path,
    map: &ColumnMap,
    source: Source,
    month: Option<YearMonth>,
) -> Result<Loaded<Vec<Trip>>> {
    map.validate_for_trips()?;
    let parser = map.timestamp_parser()?;
    let mut reader = open_csv(path)?;
    let header = Header::read(path, &mut reader)?;
    let cols = Columns::resolve(path, &header, map)?;
    let completed: Vec<String> = map
        .completed_status
        .iter()
        .map(|s| s.trim().to_ascii_lowercase())
        .collect();

    let mut diag = LoadDiagnostics::default();
    let mut trips = Vec::new();
    for (row, record) in reader.records().enumerate() {
        diag.raw_rows += 1;
        let outcome = match record {
            Ok(record) => parse_row(&record, row, &cols, &parser, source, month, &completed),
            Err(_) => RowOutcome::Parse,
        };
        match outcome {
            RowOutcome::Trip(trip) => trips.push(*trip),
            RowOutcome::Parse => diag.skipped_parse += 1,
            RowOutcome::NoLocation => diag.skipped_no_location += 1,
            RowOutcome::Status => diag.excluded_by_status += 1,
            RowOutcome::Month => diag.excluded_by_month += 1,
        }
    }
    diag.loaded = trips.len();

    let parseable = diag.loaded + diag.excluded_by_month + diag.excluded_by_status;
    if parseable == 0 {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    if diag.skipped() > 0 {
        warn!(
            "{}: skipped {} malformed rows and {} rows without location",
            path.display(),
            diag.skipped_parse,
            diag.skipped_no_location
        );
    }
    Ok(Loaded {
        value: trips,
        diagnostics: diag,
    })
}

fn parse_row(
    record: &csv::StringRecord,
    row: usize,
    cols: &Columns,
    parser: &TimestampParser,
    source: Source,
    month: Option<YearMonth>,
    completed: &[String],
) -> RowOutcome {
    if let Some(status) = cell(record, cols.status) {
        let status = status.trim().to_ascii_lowercase();
        if !completed.contains(&status) {
            return RowOutcome::Status;
        }
    }
    match build_trip(record, row, cols, parser, source) {
        None => RowOutcome::Parse,
        Some(trip) => {
            if source == Source::City && trip.pickup_point.is_none() && trip.pickup_area.is_none() {
                return RowOutcome::NoLocation;
            }
            if let Some(m) = month {
                if !m.contains(trip.start_ts) {
                    return RowOutcome::Month;
                }
            }
            RowOutcome::Trip(Box::new(trip))
        }
    }
}

/// Amount column: blank counts as zero, negatives and garbage fail the row.
fn amount(record: &csv::StringRecord, idx: Option<usize>) -> Option<f64> {
    match cell(record, idx) {
        None => Some(0.0),
        Some(raw) => match parse_number(raw) {
            Ok(None) => Some(0.0),
            Ok(Some(v)) if v >= 0.0 => Some(v),
            _ => None,
        },
    }
}

/// `Some(None)` when the point is blank, `None` when it is malformed.
fn point(record: &csv::StringRecord, idx: Option<(usize, usize)>) -> Option<Option<LatLon>> {
    let Some((lat_i, lon_i)) = idx else {
        return Some(None);
    };
    let lat = parse_number(record.get(lat_i).unwrap_or_default()).ok()?;
    let lon = parse_number(record.get(lon_i).unwrap_or_default()).ok()?;
    match (lat, lon) {
        (Some(lat), Some(lon))
            if (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) =>
        {
            Some(Some(LatLon::new(lat, lon)))
        }
        (None, None) => Some(None),
        _ => None,
    }
}

fn area(record: &csv::StringRecord, idx: Option<usize>) -> Option<String> {
    cell(record, idx)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

fn build_trip(
    record: &csv::StringRecord,
    row: usize,
    cols: &Columns,
    parser: &TimestampParser,
    source: Source,
) -> Option<Trip> {
    let start_ts = parser.parse(record.get(cols.start_ts)?)?;
    let fare = parse_number(record.get(cols.fare)?).ok()??;
    if fare < 0.0 {
        return None;
    }

    let end_parsed = match cell(record, cols.end_ts) {
        Some(raw) => Some(parser.parse(raw)?),
        None => None,
    };
    let duration_parsed = match cell(record, cols.duration_s) {
        Some(raw) => Some(parse_number(raw).ok()??),
        None => None,
    };
    let (end_ts, duration_s) = match (end_parsed, duration_parsed) {
        (Some(end), Some(d)) => (end, d),
        (Some(end), None) => (end, (end - start_ts).num_milliseconds() as f64 / 1000.0),
        (None, Some(d)) => (
            start_ts + Duration::milliseconds((d * 1000.0).round() as i64),
            d,
        ),
        (None, None) => return None,
    };
    if end_ts < start_ts || duration_s < 0.0 {
        return None;
    }

    let miles = amount(record, cols.miles)?;
    let tip = amount(record, cols.tip)?;
    let additional_charges = amount(record, cols.additional_charges)?;
    let total = match cell(record, cols.total) {
        Some(raw) => match parse_number(raw) {
            Ok(Some(v)) if v >= 0.0 => v,
            Ok(None) => fare + tip + additional_charges,
            _ => return None,
        },
        None => fare + tip + additional_charges,
    };

    let shared = cell(record, cols.shared)
        .map(|s| {
            matches!(
                s.trim().to_ascii_lowercase().as_str(),
                "true" | "t" | "yes" | "1"
            )
        })
        .unwrap_or(false);

    let trip_id = cell(record, cols.trip_id)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .unwrap_or_else(|| format!("{}-{}", source.as_str(), row + 1));

    Some(Trip {
        trip_id,
        start_ts,
        end_ts,
        duration_s,
        miles,
        fare,
        tip,
        additional_charges,
        total,
        pickup_point: point(record, cols.pickup)?,
        dropoff_point: point(record, cols.dropoff)?,
        pickup_area: area(record, cols.pickup_area),
        dropoff_area: area(record, cols.dropoff_area),
        source,
        shared,
        weather: None,
    })
}
