use std::path::Path;

use chrono::Duration;
use log::warn;

use super::{open_csv, parse_number, ColumnMap, Header, LoadDiagnostics, Loaded};
use crate::error::{Error, Result};
use crate::model::{LatLon, Ping, PingSeries};

/// Platforms export location history for the trailing 30 days only.
pub const PING_WINDOW_DAYS: i64 = 30;

pub fn load_location_pings(path: &Path, map: &ColumnMap) -> Result<Loaded<PingSeries>> {
    map.validate_for_pings()?;
    let parser = map.timestamp_parser()?;
    let mut reader = open_csv(path)?;
    let header = Header::read(path, &mut reader)?;
    let ts_i = header.require(path, map.ts.as_deref().unwrap_or_default())?;
    let lat_i = header.require(path, map.lat.as_deref().unwrap_or_default())?;
    let lon_i = header.require(path, map.lon.as_deref().unwrap_or_default())?;

    let mut diag = LoadDiagnostics::default();
    let mut pings = Vec::new();
    for record in reader.records() {
        diag.raw_rows += 1;
        let ping = record.ok().and_then(|r| {
            let ts = parser.parse(r.get(ts_i)?)?;
            let lat = parse_number(r.get(lat_i)?).ok()??;
            let lon = parse_number(r.get(lon_i)?).ok()??;
            ((-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)).then(|| Ping {
                ts,
                point: LatLon::new(lat, lon),
            })
        });
        match ping {
            Some(p) => pings.push(p),
            None => diag.skipped_parse += 1,
        }
    }
    if pings.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }

    pings.sort_by_key(|p| p.ts);
    let newest = pings.last().expect("non-empty").ts;
    let cutoff = newest - Duration::days(PING_WINDOW_DAYS);
    let before = pings.len();
    pings.retain(|p| p.ts >= cutoff);
    diag.dropped_by_window = before - pings.len();
    if diag.dropped_by_window > 0 {
        warn!(
            "{}: dropped {} pings older than {PING_WINDOW_DAYS} days before {newest}",
            path.display(),
            diag.dropped_by_window
        );
    }
    diag.loaded = pings.len();
    Ok(Loaded {
        value: PingSeries { pings },
        diagnostics: diag,
    })
}
