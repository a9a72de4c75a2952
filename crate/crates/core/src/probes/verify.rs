//! Spot-check probe payloads against a fresh recomputation from trips.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ProbeArtifact, ProbePayload};
use crate::metrics::{MetricOptions, TripAgg};
use crate::model::Trip;
use crate::time::Day;

const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    pub cell: String,
    pub field: String,
    pub expected: Option<f64>,
    pub found: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub mismatches: Vec<CellCheck>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// A payload cell with the predicate selecting the trips behind it.
struct Cell<'a> {
    label: String,
    trips: &'a [Trip],
    select: Box<dyn Fn(&Trip) -> bool + 'a>,
    trip_count: usize,
    fare_per_minute: Option<f64>,
    avg_fare: Option<f64>,
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0),
        _ => false,
    }
}

fn collect_cells<'a>(
    artifacts: &'a [ProbeArtifact],
    personal: &'a [Trip],
    city: &'a [Trip],
    opts: &'a MetricOptions,
) -> Vec<Cell<'a>> {
    let offset = opts.day_start_offset;
    let mut cells = Vec::new();
    for artifact in artifacts {
        match &artifact.payload {
            ProbePayload::Hourly(h) => {
                for (scope, trips, series) in
                    [("personal", personal, &h.personal), ("city", city, &h.city)]
                {
                    for s in series.iter() {
                        let hour = u32::from(s.hour);
                        cells.push(Cell {
                            label: format!("hourly/{scope}/{hour}"),
                            trips,
                            select: Box::new(move |t| chrono::Timelike::hour(&t.start_ts) == hour),
                            trip_count: s.trip_count,
                            fare_per_minute: s.fare_per_minute,
                            avg_fare: s.avg_fare,
                        });
                    }
                }
            }
            ProbePayload::Calendar(c) => {
                for cell in &c.month {
                    if let Some(stat) = &cell.stat {
                        let date = cell.date;
                        cells.push(Cell {
                            label: format!("calendar/personal/{date}"),
                            trips: personal,
                            select: Box::new(move |t| offset.service_date(t.start_ts) == date),
                            trip_count: stat.trip_count,
                            fare_per_minute: stat.fare_per_minute,
                            avg_fare: stat.avg_fare,
                        });
                    }
                }
                for (scope, trips, matrix) in [
                    ("personal", personal, &c.week.personal),
                    ("city", city, &c.week.city),
                ] {
                    for w in matrix.iter() {
                        let day: Day = w.weekday;
                        cells.push(Cell {
                            label: format!("weekly/{scope}/{day}"),
                            trips,
                            select: Box::new(move |t| offset.weekday(t.start_ts) == day),
                            trip_count: w.total_trips,
                            fare_per_minute: w.fare_per_minute,
                            avg_fare: w.avg_fare,
                        });
                    }
                }
            }
            ProbePayload::Map(m) => {
                for (scope, trips, layer) in
                    [("personal", personal, &m.personal), ("city", city, &m.city)]
                {
                    for (id, stat) in &layer.pickup.entries {
                        cells.push(Cell {
                            label: format!("map/{scope}/pickup/{id}"),
                            trips,
                            select: Box::new(move |t| {
                                t.pickup_area.as_deref() == Some(id.as_str())
                            }),
                            trip_count: stat.trip_count,
                            fare_per_minute: stat.fare_per_minute,
                            avg_fare: Some(stat.avg_fare),
                        });
                    }
                    for (pickup, linked) in &layer.linked_dropoff {
                        for (id, stat) in &linked.entries {
                            cells.push(Cell {
                                label: format!("map/{scope}/linked/{pickup}/{id}"),
                                trips,
                                select: Box::new(move |t| {
                                    t.pickup_area.as_deref() == Some(pickup.as_str())
                                        && t.dropoff_area.as_deref() == Some(id.as_str())
                                }),
                                trip_count: stat.trip_count,
                                fare_per_minute: stat.fare_per_minute,
                                avg_fare: Some(stat.avg_fare),
                            });
                        }
                    }
                }
            }
            ProbePayload::Animation(_) | ProbePayload::PlannerDefaults(_) => {}
        }
    }
    cells
}

/// Recompute up to `samples` randomly chosen cells from the raw trips.
pub fn verify_probes(
    artifacts: &[ProbeArtifact],
    personal: &[Trip],
    city: &[Trip],
    opts: &MetricOptions,
    samples: usize,
    seed: u64,
) -> VerifyReport {
    let cells = collect_cells(artifacts, personal, city, opts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport::default();
    for cell in cells.choose_multiple(&mut rng, samples) {
        let agg = TripAgg::of(cell.trips.iter().filter(|t| (cell.select)(t)));
        report.checked += 1;
        let mut check = |field: &str, expected: Option<f64>, found: Option<f64>| {
            if !close(expected, found) {
                report.mismatches.push(CellCheck {
                    cell: cell.label.clone(),
                    field: field.to_string(),
                    expected,
                    found,
                });
            }
        };
        check(
            "trip_count",
            Some(agg.count as f64),
            Some(cell.trip_count as f64),
        );
        check(
            "fare_per_minute",
            agg.fare_per_minute(opts.rate),
            cell.fare_per_minute,
        );
        check("avg_fare", agg.avg_fare(), cell.avg_fare);
    }
    report
}
