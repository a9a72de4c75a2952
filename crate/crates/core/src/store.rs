//! Canonical on-disk store: one file per entity plus a manifest.
//!
//! Trips are written column-wise, one file per column inside a directory
//! per trip entity, and read back in parallel. Columns are raw little-endian
//! values, strings length-prefixed. All files are
//! produced deterministically, so re-running ingest over unchanged inputs
//! reproduces the manifest hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, NaiveDateTime};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{ColumnMap, LoadDiagnostics};
use crate::model::{LatLon, NeighborhoodSet, PingSeries, Source, Trip, WeatherObs, WeatherSeries};
use crate::time::YearMonth;

pub const STORE_SCHEMA: &str = "store/1";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Directory holding the city trip columns.
pub const CITY_TRIPS_FILE: &str = "trips_city";
pub const PERSONAL_TRIPS_FILE: &str = "trips_personal";
pub const NEIGHBORHOODS_FILE: &str = "neighborhoods.json";
pub const WEATHER_FILE: &str = "weather.json";
pub const PINGS_FILE: &str = "pings.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub diagnostics: LoadDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityEntry {
    pub file: String,
    pub rows: usize,
    /// For a column directory, the hash over `name sha256` lines of its
    /// column files.
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnrichmentCounts {
    pub city_unclassified_pickups: usize,
    pub city_unclassified_dropoffs: usize,
    pub personal_unclassified_pickups: usize,
    pub personal_unclassified_dropoffs: usize,
    pub city_weather_unmatched: usize,
    pub personal_weather_unmatched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub timezone: String,
    pub month: Option<YearMonth>,
    pub sources: Vec<SourceEntry>,
    pub column_maps: BTreeMap<String, ColumnMap>,
    pub enrichment: EnrichmentCounts,
    /// Filled in by [`write_store`].
    pub entities: Vec<EntityEntry>,
}

/// Everything the probes, planner and service read.
#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    pub manifest: Manifest,
    pub city_trips: Vec<Trip>,
    pub personal_trips: Vec<Trip>,
    pub neighborhoods: NeighborhoodSet,
    pub weather: WeatherSeries,
    pub pings: Option<PingSeries>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Column-wise trip file layout.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TripColumns {
    pub rows: usize,
    pub trip_id: Vec<String>,
    /// Microseconds since the local wall-clock epoch.
    pub start_ts: Vec<i64>,
    pub end_ts: Vec<i64>,
    pub duration_s: Vec<f64>,
    pub miles: Vec<f64>,
    pub fare: Vec<f64>,
    pub tip: Vec<f64>,
    pub additional_charges: Vec<f64>,
    pub total: Vec<f64>,
    pub pickup_lat: Vec<Option<f64>>,
    pub pickup_lon: Vec<Option<f64>>,
    pub dropoff_lat: Vec<Option<f64>>,
    pub dropoff_lon: Vec<Option<f64>>,
    pub pickup_area: Vec<Option<String>>,
    pub dropoff_area: Vec<Option<String>>,
    pub source: Vec<Source>,
    pub shared: Vec<bool>,
    pub temp_f: Vec<Option<f64>>,
    pub precip_in: Vec<Option<f64>>,
}

fn to_micros(ts: NaiveDateTime) -> i64 {
    ts.and_utc().timestamp_micros()
}

fn from_micros(us: i64) -> Option<NaiveDateTime> {
    DateTime::from_timestamp_micros(us).map(|dt| dt.naive_utc())
}

impl TripColumns {
    pub fn from_trips(trips: &[Trip]) -> Self {
        let mut c = TripColumns {
            rows: trips.len(),
            ..Default::default()
        };
        for t in trips {
            c.trip_id.push(t.trip_id.clone());
            c.start_ts.push(to_micros(t.start_ts));
            c.end_ts.push(to_micros(t.end_ts));
            c.duration_s.push(t.duration_s);
            c.miles.push(t.miles);
            c.fare.push(t.fare);
            c.tip.push(t.tip);
            c.additional_charges.push(t.additional_charges);
            c.total.push(t.total);
            c.pickup_lat.push(t.pickup_point.map(|p| p.lat));
            c.pickup_lon.push(t.pickup_point.map(|p| p.lon));
            c.dropoff_lat.push(t.dropoff_point.map(|p| p.lat));
            c.dropoff_lon.push(t.dropoff_point.map(|p| p.lon));
            c.pickup_area.push(t.pickup_area.clone());
            c.dropoff_area.push(t.dropoff_area.clone());
            c.source.push(t.source);
            c.shared.push(t.shared);
            c.temp_f.push(t.weather.map(|w| w.temp_f));
            c.precip_in.push(t.weather.map(|w| w.precip_in));
        }
        c
    }

    pub fn into_trips(self, file: &Path) -> Result<Vec<Trip>> {
        let n = self.rows;
        let lens = [
            self.trip_id.len(),
            self.start_ts.len(),
            self.end_ts.len(),
            self.duration_s.len(),
            self.miles.len(),
            self.fare.len(),
            self.tip.len(),
            self.additional_charges.len(),
            self.total.len(),
            self.pickup_lat.len(),
            self.pickup_lon.len(),
            self.dropoff_lat.len(),
            self.dropoff_lon.len(),
            self.pickup_area.len(),
            self.dropoff_area.len(),
            self.source.len(),
            self.shared.len(),
            self.temp_f.len(),
            self.precip_in.len(),
        ];
        let corrupt =
            |what: &str| Error::Config(format!("{}: corrupt trip store: {what}", file.display()));
        if lens.iter().any(|&l| l != n) {
            return Err(corrupt("column lengths differ"));
        }
        let point = |lat: Option<f64>, lon: Option<f64>| match (lat, lon) {
            (Some(lat), Some(lon)) => Ok(Some(LatLon::new(lat, lon))),
            (None, None) => Ok(None),
            _ => Err(corrupt("half-populated point")),
        };

        let mut pickup_area = self.pickup_area.into_iter();
        let mut dropoff_area = self.dropoff_area.into_iter();
        let mut trips = Vec::with_capacity(n);
        for (i, trip_id) in self.trip_id.into_iter().enumerate() {
            let weather = match (self.temp_f[i], self.precip_in[i]) {
                (Some(temp_f), Some(precip_in)) => Some(WeatherObs { temp_f, precip_in }),
                (None, None) => None,
                _ => return Err(corrupt("half-populated weather")),
            };
            trips.push(Trip {
                trip_id,
                start_ts: from_micros(self.start_ts[i]).ok_or_else(|| corrupt("timestamp"))?,
                end_ts: from_micros(self.end_ts[i]).ok_or_else(|| corrupt("timestamp"))?,
                duration_s: self.duration_s[i],
                miles: self.miles[i],
                fare: self.fare[i],
                tip: self.tip[i],
                additional_charges: self.additional_charges[i],
                total: self.total[i],
                pickup_point: point(self.pickup_lat[i], self.pickup_lon[i])?,
                dropoff_point: point(self.dropoff_lat[i], self.dropoff_lon[i])?,
                pickup_area: pickup_area.next().flatten(),
                dropoff_area: dropoff_area.next().flatten(),
                source: self.source[i],
                shared: self.shared[i],
                weather,
            });
        }
        Ok(trips)
    }
}

/// Calls `$m!` with every [`TripColumns`] column field.
macro_rules! trip_columns {
    ($m:ident) => {
        $m!(
            trip_id,
            start_ts,
            end_ts,
            duration_s,
            miles,
            fare,
            tip,
            additional_charges,
            total,
            pickup_lat,
            pickup_lon,
            dropoff_lat,
            dropoff_lon,
            pickup_area,
            dropoff_area,
            source,
            shared,
            temp_f,
            precip_in
        )
    };
}

fn to_json_bytes<T: Serialize>(path: &Path, value: &T) -> Result<Vec<u8>> {
    serde_json::to_vec(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// On-disk encoding of one trip column.
trait ColumnCodec: Sized {
    const EXT: &'static str;
    fn encode(&self, path: &Path) -> Result<Vec<u8>>;
    fn decode(bytes: &[u8], path: &Path) -> Result<Self>;
    /// Placeholder for a column that was not read.
    fn absent(rows: usize) -> Self;
}

fn bad_column(path: &Path) -> Error {
    Error::Config(format!(
        "{}: corrupt trip store: column length",
        path.display()
    ))
}

macro_rules! binary_column {
    ($t:ty) => {
        impl ColumnCodec for Vec<$t> {
            const EXT: &'static str = "bin";
            fn encode(&self, _: &Path) -> Result<Vec<u8>> {
                Ok(self.iter().flat_map(|v| v.to_le_bytes()).collect())
            }
            fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
                const W: usize = std::mem::size_of::<$t>();
                if !bytes.len().is_multiple_of(W) {
                    return Err(bad_column(path));
                }
                Ok(bytes
                    .chunks_exact(W)
                    .map(|c| <$t>::from_le_bytes(c.try_into().unwrap()))
                    .collect())
            }
            fn absent(rows: usize) -> Self {
                vec![<$t>::default(); rows]
            }
        }
    };
}
binary_column!(f64);
binary_column!(i64);

/// A presence byte followed by the value.
impl ColumnCodec for Vec<Option<f64>> {
    const EXT: &'static str = "bin";
    fn encode(&self, _: &Path) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(self.len() * 9);
        for v in self {
            out.push(u8::from(v.is_some()));
            out.extend(v.unwrap_or(0.0).to_le_bytes());
        }
        Ok(out)
    }
    fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        if !bytes.len().is_multiple_of(9) {
            return Err(bad_column(path));
        }
        bytes
            .chunks_exact(9)
            .map(|c| match c[0] {
                0 => Ok(None),
                1 => Ok(Some(f64::from_le_bytes(c[1..].try_into().unwrap()))),
                _ => Err(bad_column(path)),
            })
            .collect()
    }
    fn absent(rows: usize) -> Self {
        vec![None; rows]
    }
}

impl ColumnCodec for Vec<bool> {
    const EXT: &'static str = "bin";
    fn encode(&self, _: &Path) -> Result<Vec<u8>> {
        Ok(self.iter().map(|&b| u8::from(b)).collect())
    }
    fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        bytes
            .iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(bad_column(path)),
            })
            .collect()
    }
    fn absent(rows: usize) -> Self {
        vec![false; rows]
    }
}

impl ColumnCodec for Vec<Source> {
    const EXT: &'static str = "bin";
    fn encode(&self, _: &Path) -> Result<Vec<u8>> {
        Ok(self
            .iter()
            .map(|s| match s {
                Source::Personal => 0,
                Source::City => 1,
            })
            .collect())
    }
    fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        bytes
            .iter()
            .map(|b| match b {
                0 => Ok(Source::Personal),
                1 => Ok(Source::City),
                _ => Err(bad_column(path)),
            })
            .collect()
    }
    fn absent(rows: usize) -> Self {
        vec![Source::City; rows]
    }
}

/// Strings as a u32 byte length and UTF-8 bytes; an absent value has
/// length `u32::MAX`.
fn encode_strings<'a>(values: impl Iterator<Item = Option<&'a str>>) -> Vec<u8> {
    let mut out = Vec::new();
    for v in values {
        match v {
            Some(s) => {
                out.extend((s.len() as u32).to_le_bytes());
                out.extend(s.as_bytes());
            }
            None => out.extend(u32::MAX.to_le_bytes()),
        }
    }
    out
}

fn decode_strings(mut bytes: &[u8], path: &Path) -> Result<Vec<Option<String>>> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let (len, rest) = bytes
            .split_first_chunk::<4>()
            .ok_or_else(|| bad_column(path))?;
        let len = u32::from_le_bytes(*len);
        if len == u32::MAX {
            out.push(None);
            bytes = rest;
            continue;
        }
        let (s, rest) = rest
            .split_at_checked(len as usize)
            .ok_or_else(|| bad_column(path))?;
        out.push(Some(
            String::from_utf8(s.to_vec()).map_err(|_| bad_column(path))?,
        ));
        bytes = rest;
    }
    Ok(out)
}

impl ColumnCodec for Vec<String> {
    const EXT: &'static str = "bin";
    fn encode(&self, _: &Path) -> Result<Vec<u8>> {
        Ok(encode_strings(self.iter().map(|s| Some(s.as_str()))))
    }
    fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        decode_strings(bytes, path)?
            .into_iter()
            .map(|s| s.ok_or_else(|| bad_column(path)))
            .collect()
    }
    fn absent(rows: usize) -> Self {
        vec![String::new(); rows]
    }
}

impl ColumnCodec for Vec<Option<String>> {
    const EXT: &'static str = "bin";
    fn encode(&self, _: &Path) -> Result<Vec<u8>> {
        Ok(encode_strings(self.iter().map(|s| s.as_deref())))
    }
    fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        decode_strings(bytes, path)
    }
    fn absent(rows: usize) -> Self {
        vec![None; rows]
    }
}

fn column_path<C: ColumnCodec>(root: &Path, name: &str, _: &C) -> PathBuf {
    root.join(format!("{name}.{}", C::EXT))
}

fn read_column<C: ColumnCodec>(path: &Path) -> Result<C> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    C::decode(&bytes, path)
}

fn write_trip_columns(dir: &Path, name: &str, trips: &[Trip]) -> Result<EntityEntry> {
    let cols = TripColumns::from_trips(trips);
    let root = dir.join(name);
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let mut listing = String::new();
    macro_rules! write_cols {
        ($($f:ident),*) => {
            $({
                let path = column_path(&root, stringify!($f), &cols.$f);
                let bytes = cols.$f.encode(&path)?;
                fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
                listing.push_str(&format!("{} {}\n", stringify!($f), sha256_hex(&bytes)));
            })*
        };
    }
    trip_columns!(write_cols);
    Ok(EntityEntry {
        file: name.to_string(),
        rows: cols.rows,
        sha256: sha256_hex(listing.as_bytes()),
    })
}

/// Columns the planner never reads.
const NOT_PLANNED: &[&str] = &[
    "trip_id",
    "pickup_lat",
    "pickup_lon",
    "dropoff_lat",
    "dropoff_lon",
    "dropoff_area",
];

/// Read a trip column directory, leaving the `skip` columns empty.
fn read_trip_columns(dir: &Path, entity: &EntityEntry, skip: &[&str]) -> Result<Vec<Trip>> {
    let root = dir.join(&entity.file);
    let mut cols = TripColumns {
        rows: entity.rows,
        ..Default::default()
    };
    let errors = Mutex::new(Vec::new());
    rayon::scope(|s| {
        macro_rules! read_cols {
            ($($f:ident),*) => {
                $({
                    let (errors, slot) = (&errors, &mut cols.$f);
                    if skip.contains(&stringify!($f)) {
                        *slot = ColumnCodec::absent(entity.rows);
                    } else {
                        let path = column_path(&root, stringify!($f), &*slot);
                        s.spawn(move |_| match read_column(&path) {
                            Ok(v) => *slot = v,
                            Err(e) => errors.lock().unwrap().push(e),
                        });
                    }
                })*
            };
        }
        trip_columns!(read_cols);
    });
    if let Some(e) = errors.into_inner().unwrap().into_iter().next() {
        return Err(e);
    }
    cols.into_trips(&root)
}

fn entity<'m>(manifest: &'m Manifest, dir: &Path, file: &str) -> Result<&'m EntityEntry> {
    manifest
        .entities
        .iter()
        .find(|e| e.file == file)
        .ok_or_else(|| Error::Config(format!("{}: manifest lists no `{file}`", dir.display())))
}

fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T, rows: usize) -> Result<EntityEntry> {
    let path = dir.join(file);
    let bytes = to_json_bytes(&path, value)?;
    fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    Ok(EntityEntry {
        file: file.to_string(),
        rows,
        sha256: sha256_hex(&bytes),
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Write every entity file and the manifest into `dir`. Returns the
/// manifest hash.
pub fn write_store(dir: &Path, store: &Store) -> Result<String> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entities = vec![
        write_trip_columns(dir, CITY_TRIPS_FILE, &store.city_trips)?,
        write_trip_columns(dir, PERSONAL_TRIPS_FILE, &store.personal_trips)?,
        write_json(
            dir,
            NEIGHBORHOODS_FILE,
            &store.neighborhoods,
            store.neighborhoods.len(),
        )?,
        write_json(
            dir,
            WEATHER_FILE,
            &store.weather,
            store.weather.records.len(),
        )?,
    ];
    let stale_pings = dir.join(PINGS_FILE);
    match &store.pings {
        Some(p) => entities.push(write_json(dir, PINGS_FILE, p, p.pings.len())?),
        None if stale_pings.exists() => {
            fs::remove_file(&stale_pings).map_err(|e| Error::io(&stale_pings, e))?
        }
        None => {}
    }

    let manifest = Manifest {
        entities,
        ..store.manifest.clone()
    };
    let path = dir.join(MANIFEST_FILE);
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    bytes.push(b'\n');
    fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn manifest_hash(dir: &Path) -> Result<String> {
    sha256_file(&dir.join(MANIFEST_FILE))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
    if manifest.schema != STORE_SCHEMA {
        return Err(Error::Version {
            found: manifest.schema,
            expected: STORE_SCHEMA.into(),
        });
    }
    Ok(manifest)
}

pub fn read_store(dir: &Path) -> Result<Store> {
    let manifest = read_manifest(dir)?;
    let (trips, rest) = rayon::join(
        || -> Result<_> {
            Ok((
                read_trip_columns(dir, entity(&manifest, dir, CITY_TRIPS_FILE)?, &[])?,
                read_trip_columns(dir, entity(&manifest, dir, PERSONAL_TRIPS_FILE)?, &[])?,
            ))
        },
        || -> Result<_> {
            let pings = if manifest.entities.iter().any(|e| e.file == PINGS_FILE) {
                Some(read_json(&dir.join(PINGS_FILE))?)
            } else {
                None
            };
            Ok((
                read_json(&dir.join(NEIGHBORHOODS_FILE))?,
                read_json(&dir.join(WEATHER_FILE))?,
                pings,
            ))
        },
    );
    let (city_trips, personal_trips) = trips?;
    let (neighborhoods, weather, pings) = rest?;
    Ok(Store {
        manifest,
        city_trips,
        personal_trips,
        neighborhoods,
        weather,
        pings,
    })
}

/// Only the city trips.
pub fn read_city_trips(dir: &Path) -> Result<Vec<Trip>> {
    let manifest = read_manifest(dir)?;
    read_trip_columns(dir, entity(&manifest, dir, CITY_TRIPS_FILE)?, &[])
}

/// City trips with just the columns the planner reads. Trip ids are
/// empty and points and drop-off areas absent.
pub fn read_planner_trips(dir: &Path) -> Result<Vec<Trip>> {
    let manifest = read_manifest(dir)?;
    read_trip_columns(dir, entity(&manifest, dir, CITY_TRIPS_FILE)?, NOT_PLANNED)
}
