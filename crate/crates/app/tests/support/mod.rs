//! Synthetic input bundles written in the real source formats.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub const LON: (f64, f64) = (-87.94, -87.52);
pub const LAT: (f64, f64) = (41.64, 42.02);

#[derive(Debug, Clone, Copy)]
pub struct BundleSpec {
    pub city_trips: usize,
    pub personal_trips: usize,
    /// Grid columns and rows of neighborhood polygons.
    pub grid: (usize, usize),
    pub pings: bool,
    pub seed: u64,
}

impl Default for BundleSpec {
    fn default() -> Self {
        Self {
            city_trips: 2_000,
            personal_trips: 200,
            grid: (14, 7),
            pings: true,
            seed: 7,
        }
    }
}

fn june_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2022, 6, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

/// Grid cells as closed rings with every edge split into `k` segments.
pub fn grid_geojson((cols, rows): (usize, usize), k: usize) -> serde_json::Value {
    let (dx, dy) = ((LON.1 - LON.0) / cols as f64, (LAT.1 - LAT.0) / rows as f64);
    let mut features = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let (x0, y0) = (LON.0 + c as f64 * dx, LAT.0 + r as f64 * dy);
            let corners = [[x0, y0], [x0 + dx, y0], [x0 + dx, y0 + dy], [x0, y0 + dy]];
            let mut ring = Vec::new();
            for i in 0..4 {
                let (a, b) = (corners[i], corners[(i + 1) % 4]);
                for s in 0..k {
                    let f = s as f64 / k as f64;
                    ring.push([a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]);
                }
            }
            ring.push(ring[0]);
            features.push(json!({
                "type": "Feature",
                "properties": { "pri_neigh": format!("Area {:03}", r * cols + c + 1) },
                "geometry": { "type": "Polygon", "coordinates": [ring] },
            }));
        }
    }
    json!({ "type": "FeatureCollection", "features": features })
}

fn point(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // a few points fall outside every polygon
    let pad = 0.02;
    (
        rng.gen_range(LAT.0 - pad..LAT.1 + pad),
        rng.gen_range(LON.0 - pad..LON.1 + pad),
    )
}

fn trip_times(rng: &mut ChaCha8Rng) -> (NaiveDateTime, i64) {
    let start = june_start() + Duration::minutes(rng.gen_range(0..30 * 24 * 60));
    let secs = if rng.gen_bool(0.01) {
        0
    } else {
        rng.gen_range(120..3600)
    };
    (start, secs)
}

pub fn city_csv(n: usize, rng: &mut ChaCha8Rng) -> String {
    let mut s = String::with_capacity(n * 160);
    s.push_str(
        "Trip ID,Trip Start Timestamp,Trip End Timestamp,Trip Seconds,Trip Miles,Fare,Tip,Additional Charges,\
         Trip Total,Shared Trip Authorized,Pickup Centroid Latitude,Pickup Centroid Longitude,\
         Dropoff Centroid Latitude,Dropoff Centroid Longitude\n",
    );
    let fmt = "%m/%d/%Y %I:%M:%S %p";
    for i in 0..n {
        let (start, secs) = trip_times(rng);
        let end = start + Duration::seconds(secs);
        let miles = secs as f64 / 3600.0 * rng.gen_range(8.0..30.0);
        let fare = ((2.5 + miles * 1.6 + secs as f64 / 60.0 * 0.3 * rng.gen_range(0.7..1.6))
            * 100.0)
            .round()
            / 100.0;
        let tip = if rng.gen_bool(0.3) {
            rng.gen_range(1..8) as f64
        } else {
            0.0
        };
        let extra = (rng.gen_range(0.0..4.0f64) * 100.0).round() / 100.0;
        let (plat, plon) = point(rng);
        let (dlat, dlon) = point(rng);
        writeln!(
            s,
            "c{i},{},{},{secs},{miles:.2},{fare:.2},{tip:.2},{extra:.2},{:.2},{},{plat:.6},{plon:.6},{dlat:.6},{dlon:.6}",
            start.format(fmt),
            end.format(fmt),
            fare + tip + extra,
            rng.gen_bool(0.05),
        )
        .unwrap();
    }
    s
}

pub fn personal_csv(n: usize, rng: &mut ChaCha8Rng) -> String {
    let mut s = String::from(
        "Trip UUID,Status,Begin Trip Time,Dropoff Time,Distance (miles),Fare,Tip,Begin Trip Lat,Begin Trip Lng,Dropoff Lat,Dropoff Lng\n",
    );
    let fmt = "%Y-%m-%d %H:%M:%S";
    for i in 0..n {
        let (start, secs) = trip_times(rng);
        let status = if rng.gen_bool(0.03) {
            "canceled"
        } else {
            "completed"
        };
        let miles = secs as f64 / 3600.0 * rng.gen_range(8.0..30.0);
        let fare = 3.0 + miles * 1.2;
        let tip = if rng.gen_bool(0.4) {
            rng.gen_range(1..6) as f64
        } else {
            0.0
        };
        let (plat, plon) = point(rng);
        let (dlat, dlon) = point(rng);
        writeln!(
            s,
            "p{i},{status},{},{},{miles:.2},{fare:.2},{tip:.2},{plat:.6},{plon:.6},{dlat:.6},{dlon:.6}",
            start.format(fmt),
            (start + Duration::seconds(secs)).format(fmt),
        )
        .unwrap();
    }
    s
}

pub fn weather_csv(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::from("name,datetime,temp,precip\n");
    for h in 0..31 * 24 {
        let t = june_start() + Duration::hours(h);
        let precip = if rng.gen_bool(0.1) {
            rng.gen_range(0.01..0.3)
        } else {
            0.0
        };
        writeln!(
            s,
            "Chicago,{},{:.1},{precip:.2}",
            t.format("%Y-%m-%dT%H:%M:%S"),
            rng.gen_range(55.0..90.0)
        )
        .unwrap();
    }
    s
}

pub fn pings_csv(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::from("Timestamp,Latitude,Longitude\n");
    let (mut lat, mut lon): (f64, f64) = (41.88, -87.63);
    for day in 27..=30 {
        let mut t = NaiveDate::from_ymd_opt(2022, 6, day)
            .unwrap()
            .and_hms_opt(7, 0, 0)
            .unwrap();
        let end = t + Duration::hours(12);
        while t < end {
            lat = (lat + rng.gen_range(-0.003..0.003f64)).clamp(LAT.0, LAT.1);
            lon = (lon + rng.gen_range(-0.003..0.003f64)).clamp(LON.0, LON.1);
            writeln!(s, "{},{lat:.6},{lon:.6}", t.format("%Y-%m-%d %H:%M:%S")).unwrap();
            // mostly short hops, occasionally a long silence
            t += Duration::seconds(if rng.gen_bool(0.02) {
                1800
            } else {
                rng.gen_range(20..240)
            });
        }
    }
    s
}

/// Write every source plus a config file into `dir`; returns the config path.
pub fn write_bundle(dir: &Path, spec: BundleSpec) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    fs::write(dir.join("city.csv"), city_csv(spec.city_trips, &mut rng)).unwrap();
    fs::write(
        dir.join("personal.csv"),
        personal_csv(spec.personal_trips, &mut rng),
    )
    .unwrap();
    fs::write(
        dir.join("boundaries.geojson"),
        serde_json::to_vec(&grid_geojson(spec.grid, 4)).unwrap(),
    )
    .unwrap();
    fs::write(dir.join("weather.csv"), weather_csv(&mut rng)).unwrap();
    let pings = if spec.pings {
        fs::write(dir.join("pings.csv"), pings_csv(&mut rng)).unwrap();
        "pings = \"pings.csv\"\n"
    } else {
        ""
    };
    let config = format!(
        "store_dir = \"store\"\nprobe_dir = \"probes\"\n\n[paths]\ncity_trips = \"city.csv\"\n\
         personal_trips = \"personal.csv\"\nboundaries = \"boundaries.geojson\"\nweather = \"weather.csv\"\n{pings}"
    );
    let path = dir.join("rideprobe.toml");
    fs::write(&path, config).unwrap();
    path
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rideprobe")
}

pub fn cli(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run rideprobe")
}
