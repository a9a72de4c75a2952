mod common;

use std::path::PathBuf;

use chrono::NaiveDate;
use proptest::prelude::*;
use rideprobe_core::metrics::{linked_dropoff_stats, MetricOptions};
use rideprobe_core::pipeline::{build_store, IngestPlan, SourcePaths};
use rideprobe_core::planner::{PlannerInput, PlannerOptions};
use rideprobe_core::probes::{
    build_animation_probe, build_calendar_probe, build_hourly_probe, build_map_probe,
    build_planner_defaults_probe, export_probe, import_probe, latest_ping_date, parse_probe,
    probe_bytes, verify_probes, ProbeArtifact, ProbeKind, ProbePayload, PROBE_SCHEMA,
};
use rideprobe_core::store::Store;
use rideprobe_core::time::{DateRange, DayStartOffset};
use rideprobe_core::{Error, NeighborhoodSet};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn store() -> Store {
    build_store(&IngestPlan::with_defaults(
        SourcePaths {
            city_trips: fixture("city_3rows.csv"),
            personal_trips: fixture("personal_trips.csv"),
            boundaries: fixture("boundaries_two.geojson"),
            weather: fixture("weather_day.csv"),
            pings: Some(fixture("pings.csv")),
        },
        "America/Chicago",
    ))
    .unwrap()
}

fn june() -> DateRange {
    DateRange::month(2022, 6).unwrap()
}

fn all_probes(s: &Store, opts: &MetricOptions) -> Vec<ProbeArtifact> {
    let pings = s.pings.as_ref().unwrap();
    let date = latest_ping_date(pings, opts.day_start_offset).unwrap();
    vec![
        build_hourly_probe(&s.personal_trips, &s.city_trips, opts),
        build_calendar_probe(&s.personal_trips, &s.city_trips, june(), 5, opts).unwrap(),
        build_map_probe(&s.personal_trips, &s.city_trips, &s.neighborhoods, 5, opts).unwrap(),
        build_animation_probe(pings, &s.personal_trips, date, 30, opts.day_start_offset).unwrap(),
        build_planner_defaults_probe(
            &s.city_trips,
            &s.neighborhoods,
            PlannerInput::default(),
            PlannerOptions::default(),
        ),
    ]
}

#[test]
fn every_kind_round_trips_through_a_file() {
    let s = store();
    let dir = tempfile::tempdir().unwrap();
    let probes = all_probes(&s, &MetricOptions::default());
    let kinds: Vec<ProbeKind> = probes.iter().map(|p| p.kind).collect();
    assert_eq!(kinds, ProbeKind::ALL.to_vec());
    for p in &probes {
        let p = p.clone().with_store_hash("abc");
        let path = dir.path().join(p.kind.file_name());
        export_probe(&p, &path).unwrap();
        assert_eq!(import_probe(&path).unwrap(), p);
        assert_eq!(std::fs::read(&path).unwrap(), probe_bytes(&p).unwrap());
    }
}

#[test]
fn export_is_byte_identical_across_builds() {
    let opts = MetricOptions::with_offset(DayStartOffset::new(4).unwrap());
    let a = all_probes(&store(), &opts);
    let b = all_probes(&store(), &opts);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(probe_bytes(x).unwrap(), probe_bytes(y).unwrap());
    }
}

#[test]
fn wrong_schema_is_a_version_error() {
    let p = build_hourly_probe(&[], &[], &MetricOptions::default());
    let text = String::from_utf8(probe_bytes(&p).unwrap()).unwrap();
    assert!(text.contains(PROBE_SCHEMA));
    let bumped = text.replace(PROBE_SCHEMA, "probe/2");
    match parse_probe(bumped.as_bytes(), "hourly.json".as_ref()) {
        Err(Error::Version { found, expected }) => {
            assert_eq!(found, "probe/2");
            assert_eq!(expected, PROBE_SCHEMA);
        }
        other => panic!("expected version error, got {other:?}"),
    }
    let mislabelled = text.replacen("\"kind\": \"hourly\"", "\"kind\": \"map\"", 1);
    assert!(parse_probe(mislabelled.as_bytes(), "hourly.json".as_ref()).is_err());
}

#[test]
fn hourly_probe_shape() {
    let s = store();
    let p = build_hourly_probe(&s.personal_trips, &s.city_trips, &MetricOptions::default());
    let ProbePayload::Hourly(h) = p.payload else {
        panic!()
    };
    assert_eq!(h.personal.len(), 24);
    assert_eq!(h.city.len(), 24);
    assert_eq!(
        h.personal.iter().map(|b| b.trip_count).sum::<usize>(),
        s.personal_trips.len()
    );
    for gap in &h.city_gaps {
        let b = h.city.iter().find(|b| b.hour == *gap).unwrap();
        assert_eq!(b.trip_count, 0);
        assert!(b.fare_per_minute.is_none());
    }
    assert_eq!(
        h.city_gaps.len() + h.city.iter().filter(|b| b.trip_count > 0).count(),
        24
    );
}

#[test]
fn calendar_covers_every_day_of_the_month() {
    let s = store();
    let p = build_calendar_probe(
        &s.personal_trips,
        &s.city_trips,
        june(),
        5,
        &MetricOptions::default(),
    )
    .unwrap();
    let ProbePayload::Calendar(c) = p.payload else {
        panic!()
    };
    assert_eq!(c.month.len(), 30);
    assert_eq!(
        c.month[0].date,
        NaiveDate::from_ymd_opt(2022, 6, 1).unwrap()
    );
    assert_eq!(c.week.variables.len(), 4);
    assert_eq!(c.week.personal.len(), 7);
    let with_data = c.month.iter().filter(|d| d.stat.is_some()).count();
    assert!(with_data > 0 && with_data < 30);
}

#[test]
fn map_geometry_and_linkage() {
    let s = store();
    let opts = MetricOptions::default();
    let p = build_map_probe(&s.personal_trips, &s.city_trips, &s.neighborhoods, 5, &opts).unwrap();
    let ProbePayload::Map(m) = p.payload else {
        panic!()
    };
    assert_eq!(m.geometry.len(), s.neighborhoods.len());
    for (id, linked) in &m.city.linked_dropoff {
        assert_eq!(
            linked,
            &linked_dropoff_stats(&s.city_trips, id, 5, &opts).unwrap()
        );
    }
    assert!(m.city.linked_dropoff.contains_key("loop"));
}

#[test]
fn animation_uses_latest_ping_day() {
    let s = store();
    let pings = s.pings.as_ref().unwrap();
    let date = latest_ping_date(pings, DayStartOffset::MIDNIGHT).unwrap();
    assert_eq!(date, NaiveDate::from_ymd_opt(2022, 6, 12).unwrap());
    let p = build_animation_probe(pings, &s.personal_trips, date, 30, DayStartOffset::MIDNIGHT)
        .unwrap();
    let ProbePayload::Animation(a) = p.payload else {
        panic!()
    };
    assert!(a
        .frames
        .windows(2)
        .all(|w| (w[1].t - w[0].t).num_seconds() == 30));
    // pings are 29 minutes apart, beyond the interpolation limit
    assert!(a.frames.iter().any(|f| f.held));
}

#[test]
fn planner_defaults_list_neighborhoods() {
    let s = store();
    let p = build_planner_defaults_probe(
        &s.city_trips,
        &s.neighborhoods,
        PlannerInput::default(),
        PlannerOptions::default(),
    );
    let ProbePayload::PlannerDefaults(d) = p.payload else {
        panic!()
    };
    assert_eq!(d.defaults.platform_cut, 0.25);
    assert_eq!(d.defaults.tpc, 0.55);
    let ids: Vec<&str> = d.neighborhoods.iter().map(|n| n.id.as_str()).collect();
    assert_eq!(ids, vec!["hyde_park", "loop"]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sampled_cells_match_recomputation(
        personal in common::trips(150),
        city in common::trips(300),
        offset in 0u8..24,
        seed in any::<u64>(),
    ) {
        let opts = MetricOptions::with_offset(DayStartOffset::new(offset).unwrap());
        let empty = NeighborhoodSet::new(vec![]);
        let probes = vec![
            build_hourly_probe(&personal, &city, &opts),
            build_calendar_probe(&personal, &city, june(), 5, &opts).unwrap(),
            build_map_probe(&personal, &city, &empty, 5, &opts).unwrap(),
        ];
        let report = verify_probes(&probes, &personal, &city, &opts, 40, seed);
        prop_assert!(report.ok(), "{:?}", report.mismatches);
        prop_assert!(report.checked > 0);
    }
}
