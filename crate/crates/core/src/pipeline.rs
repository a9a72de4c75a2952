//! Batch build: load every source, classify endpoints, attach weather.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geo::classify_trips;
use crate::ingest::{
    load_boundaries_with, load_city_trips, load_location_pings, load_personal_trips, load_weather,
    BoundaryOptions, ColumnMap, LoadDiagnostics, WeatherColumns,
};
use crate::metrics::attach_weather;
use crate::store::{sha256_file, EnrichmentCounts, Manifest, SourceEntry, Store, STORE_SCHEMA};
use crate::time::YearMonth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePaths {
    pub city_trips: PathBuf,
    pub personal_trips: PathBuf,
    pub boundaries: PathBuf,
    pub weather: PathBuf,
    pub pings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestPlan {
    pub paths: SourcePaths,
    pub city_columns: ColumnMap,
    pub personal_columns: ColumnMap,
    pub ping_columns: ColumnMap,
    pub weather_columns: WeatherColumns,
    pub boundary_options: BoundaryOptions,
    pub timezone: String,
    pub month: Option<YearMonth>,
}

impl IngestPlan {
    /// Default column maps for every source, all in `timezone`.
    pub fn with_defaults(paths: SourcePaths, timezone: &str) -> Self {
        let tz = |mut m: ColumnMap| {
            m.timezone = timezone.to_string();
            m
        };
        Self {
            paths,
            city_columns: tz(ColumnMap::chicago_tnp()),
            personal_columns: tz(ColumnMap::personal_export()),
            ping_columns: tz(ColumnMap::personal_pings()),
            weather_columns: WeatherColumns {
                timezone: timezone.to_string(),
                ..WeatherColumns::default()
            },
            boundary_options: BoundaryOptions::default(),
            timezone: timezone.to_string(),
            month: None,
        }
    }
}

fn source(role: &str, path: &Path, diagnostics: LoadDiagnostics) -> Result<SourceEntry> {
    Ok(SourceEntry {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
        diagnostics,
    })
}

pub fn build_store(plan: &IngestPlan) -> Result<Store> {
    let p = &plan.paths;
    // boundaries first so a missing polygon file fails before the big parse
    let neighborhoods = load_boundaries_with(&p.boundaries, &plan.boundary_options)?;

    let ((city, personal), (weather, pings)) = rayon::join(
        || {
            rayon::join(
                || load_city_trips(&p.city_trips, &plan.city_columns, plan.month),
                || load_personal_trips(&p.personal_trips, &plan.personal_columns),
            )
        },
        || {
            rayon::join(
                || load_weather(&p.weather, &plan.weather_columns),
                || {
                    p.pings
                        .as_ref()
                        .map(|path| load_location_pings(path, &plan.ping_columns))
                        .transpose()
                },
            )
        },
    );
    let (city, personal, weather, pings) = (city?, personal?, weather?, pings?);

    let mut sources = vec![
        source("city_trips", &p.city_trips, city.diagnostics)?,
        source("personal_trips", &p.personal_trips, personal.diagnostics)?,
        source(
            "boundaries",
            &p.boundaries,
            LoadDiagnostics {
                raw_rows: neighborhoods.len(),
                loaded: neighborhoods.len(),
                ..Default::default()
            },
        )?,
        source("weather", &p.weather, weather.diagnostics)?,
    ];
    if let (Some(path), Some(loaded)) = (&p.pings, &pings) {
        sources.push(source("pings", path, loaded.diagnostics)?);
    }

    let city = classify_trips(city.value, &neighborhoods)?;
    let personal = classify_trips(personal.value, &neighborhoods)?;
    let mut city_trips = city.trips;
    let mut personal_trips = personal.trips;
    let city_weather = attach_weather(&mut city_trips, &weather.value);
    let personal_weather = attach_weather(&mut personal_trips, &weather.value);

    let mut column_maps = BTreeMap::new();
    column_maps.insert("city_trips".to_string(), plan.city_columns.clone());
    column_maps.insert("personal_trips".to_string(), plan.personal_columns.clone());
    if p.pings.is_some() {
        column_maps.insert("pings".to_string(), plan.ping_columns.clone());
    }

    Ok(Store {
        manifest: Manifest {
            schema: STORE_SCHEMA.to_string(),
            timezone: plan.timezone.clone(),
            month: plan.month,
            sources,
            column_maps,
            enrichment: EnrichmentCounts {
                city_unclassified_pickups: city.unclassified_pickups,
                city_unclassified_dropoffs: city.unclassified_dropoffs,
                personal_unclassified_pickups: personal.unclassified_pickups,
                personal_unclassified_dropoffs: personal.unclassified_dropoffs,
                city_weather_unmatched: city_weather.unmatched,
                personal_weather_unmatched: personal_weather.unmatched,
            },
            entities: Vec::new(),
        },
        city_trips,
        personal_trips,
        neighborhoods,
        weather: weather.value,
        pings: pings.map(|l| l.value),
    })
}
