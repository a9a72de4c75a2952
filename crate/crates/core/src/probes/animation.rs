use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{counts, ProbeArtifact, ProbeMeta, ProbePayload, Scope};
use crate::error::{Error, Result};
use crate::model::{LatLon, Ping, PingSeries, Trip};
use crate::time::{DateRange, DayStartOffset};

pub const DEFAULT_FRAME_STEP_S: u32 = 30;
/// Pings further apart than this are not interpolated between.
pub const MAX_INTERPOLATION_GAP_S: i64 = 15 * 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnimationFrame {
    pub t: NaiveDateTime,
    pub point: LatLon,
    pub trip_active: bool,
    /// Position held at the last ping because the surrounding gap is too
    /// long to interpolate.
    pub held: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimationProbe {
    pub date: NaiveDate,
    pub frame_step_s: u32,
    pub day_start_offset: DayStartOffset,
    pub max_interpolation_gap_s: i64,
    pub frames: Vec<AnimationFrame>,
}

/// Service dates that have at least one ping, ascending.
pub fn ping_dates(pings: &PingSeries, offset: DayStartOffset) -> Vec<NaiveDate> {
    pings
        .pings
        .iter()
        .map(|p| offset.service_date(p.ts))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn latest_ping_date(pings: &PingSeries, offset: DayStartOffset) -> Option<NaiveDate> {
    pings.pings.iter().map(|p| offset.service_date(p.ts)).max()
}

fn lerp(a: LatLon, b: LatLon, f: f64) -> LatLon {
    LatLon::new(a.lat + (b.lat - a.lat) * f, a.lon + (b.lon - a.lon) * f)
}

fn position(day: &[Ping], t: NaiveDateTime) -> (LatLon, bool) {
    // last ping at or before t
    let i = day.partition_point(|p| p.ts <= t).saturating_sub(1);
    let here = day[i];
    if here.ts == t || i + 1 == day.len() {
        return (here.point, false);
    }
    let next = day[i + 1];
    let gap = (next.ts - here.ts).num_milliseconds();
    if gap > MAX_INTERPOLATION_GAP_S * 1000 {
        return (here.point, true);
    }
    let f = (t - here.ts).num_milliseconds() as f64 / gap as f64;
    (lerp(here.point, next.point, f), false)
}

/// Disjoint, sorted `[start, end]` intervals covering every trip.
fn trip_intervals(trips: &[Trip]) -> Vec<(NaiveDateTime, NaiveDateTime)> {
    let mut spans: Vec<_> = trips.iter().map(|t| (t.start_ts, t.end_ts)).collect();
    spans.sort();
    let mut merged: Vec<(NaiveDateTime, NaiveDateTime)> = Vec::with_capacity(spans.len());
    for (s, e) in spans {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

/// Frames at a fixed step across the day's ping span, positions linearly
/// interpolated between pings.
pub fn build_animation_probe(
    pings: &PingSeries,
    trips: &[Trip],
    date: NaiveDate,
    frame_step_s: u32,
    offset: DayStartOffset,
) -> Result<ProbeArtifact> {
    if frame_step_s == 0 {
        return Err(Error::Precondition("frame step must be positive".into()));
    }
    let (day_start, day_end) = offset.bounds(date);
    let lo = pings.pings.partition_point(|p| p.ts < day_start);
    let hi = pings.pings.partition_point(|p| p.ts < day_end);
    let day = &pings.pings[lo..hi];
    if day.is_empty() {
        return Err(Error::EmptyDay {
            date,
            available: ping_dates(pings, offset),
        });
    }

    let first = day[0].ts;
    let span_ms = (day[day.len() - 1].ts - first).num_milliseconds();
    let step_ms = i64::from(frame_step_s) * 1000;
    let n_frames = (span_ms / step_ms) as usize + 1;

    let intervals = trip_intervals(trips);
    let mut k = 0;
    let mut frames = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let t = first + Duration::milliseconds(step_ms * i as i64);
        while k < intervals.len() && intervals[k].1 < t {
            k += 1;
        }
        let trip_active = k < intervals.len() && intervals[k].0 <= t;
        let (point, held) = position(day, t);
        frames.push(AnimationFrame {
            t,
            point,
            trip_active,
            held,
        });
    }

    let day_trips = trips
        .iter()
        .filter(|t| t.end_ts >= day_start && t.start_ts < day_end)
        .count();
    let meta = ProbeMeta {
        data_range: Some(DateRange {
            start: date,
            end: date,
        }),
        store_hash: None,
        row_counts: counts(&[("pings", day.len()), ("trips", day_trips)]),
    };
    let payload = AnimationProbe {
        date,
        frame_step_s,
        day_start_offset: offset,
        max_interpolation_gap_s: MAX_INTERPOLATION_GAP_S,
        frames,
    };
    Ok(ProbeArtifact::new(
        Scope::Personal,
        meta,
        ProbePayload::Animation(payload),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Source;

    fn ts(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").unwrap()
    }

    fn ping(s: &str, lat: f64, lon: f64) -> Ping {
        Ping {
            ts: ts(s),
            point: LatLon::new(lat, lon),
        }
    }

    fn frames(artifact: &ProbeArtifact) -> &[AnimationFrame] {
        match &artifact.payload {
            ProbePayload::Animation(a) => &a.frames,
            _ => panic!("not an animation"),
        }
    }

    fn trip(start: &str, end: &str) -> Trip {
        Trip {
            trip_id: start.into(),
            start_ts: ts(start),
            end_ts: ts(end),
            duration_s: (ts(end) - ts(start)).num_seconds() as f64,
            miles: 1.0,
            fare: 5.0,
            tip: 0.0,
            additional_charges: 0.0,
            total: 5.0,
            pickup_point: None,
            dropoff_point: None,
            pickup_area: None,
            dropoff_area: None,
            source: Source::Personal,
            shared: false,
            weather: None,
        }
    }

    #[test]
    fn midpoint_interpolation() {
        let pings = PingSeries {
            pings: vec![
                ping("2022-06-10 12:00:00", 41.0, -87.0),
                ping("2022-06-10 12:01:00", 42.0, -88.0),
            ],
        };
        let date = NaiveDate::from_ymd_opt(2022, 6, 10).unwrap();
        let a = build_animation_probe(&pings, &[], date, 30, DayStartOffset::MIDNIGHT).unwrap();
        let f = frames(&a);
        assert_eq!(f.len(), 3);
        assert_eq!(f[1].point, LatLon::new(41.5, -87.5));
        assert!(!f[1].held);
        assert_eq!(f[2].point, LatLon::new(42.0, -88.0));
    }

    #[test]
    fn long_gap_holds_position() {
        let pings = PingSeries {
            pings: vec![
                ping("2022-06-10 12:00:00", 41.0, -87.0),
                ping("2022-06-10 12:20:00", 42.0, -88.0),
            ],
        };
        let date = NaiveDate::from_ymd_opt(2022, 6, 10).unwrap();
        let a = build_animation_probe(&pings, &[], date, 60, DayStartOffset::MIDNIGHT).unwrap();
        let f = frames(&a);
        assert_eq!(f.len(), 21);
        assert!(f[1..20]
            .iter()
            .all(|fr| fr.held && fr.point == LatLon::new(41.0, -87.0)));
        assert!(!f[0].held && !f[20].held);
    }

    #[test]
    fn trip_activity() {
        let pings = PingSeries {
            pings: vec![
                ping("2022-06-10 12:00:00", 41.0, -87.0),
                ping("2022-06-10 12:10:00", 41.1, -87.1),
            ],
        };
        let trips = vec![trip("2022-06-10 12:02:00", "2022-06-10 12:04:00")];
        let date = NaiveDate::from_ymd_opt(2022, 6, 10).unwrap();
        let a = build_animation_probe(&pings, &trips, date, 60, DayStartOffset::MIDNIGHT).unwrap();
        let active: Vec<bool> = frames(&a).iter().map(|f| f.trip_active).collect();
        assert_eq!(
            active,
            vec![false, false, true, true, true, false, false, false, false, false, false]
        );
    }

    #[test]
    fn empty_day_lists_available_dates() {
        let pings = PingSeries {
            pings: vec![
                ping("2022-06-10 12:00:00", 41.0, -87.0),
                ping("2022-06-12 02:00:00", 41.0, -87.0),
            ],
        };
        let d = |day| NaiveDate::from_ymd_opt(2022, 6, day).unwrap();
        let off = DayStartOffset::new(4).unwrap();
        match build_animation_probe(&pings, &[], d(12), 30, off) {
            Err(Error::EmptyDay { available, .. }) => {
                // the 02:00 ping belongs to the 11th under a 4 AM day start
                assert_eq!(available, vec![d(10), d(11)]);
            }
            other => panic!("expected EmptyDay, got {other:?}"),
        }
    }
}
