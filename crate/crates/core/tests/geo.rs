use std::f64::consts::TAU;

use proptest::prelude::*;
use rideprobe_core::geo::{classify_point, classify_trips, point_in_polygon, Classifier, Ring};
use rideprobe_core::{LatLon, Neighborhood, NeighborhoodSet, Source, Trip};

/// Winding number of a closed ring around (x, y), by signed crossings.
fn winding_number(ring: &[[f64; 2]], x: f64, y: f64) -> i32 {
    let mut wn = 0;
    for w in ring.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        let side = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0);
        if y0 <= y {
            if y1 > y && side > 0.0 {
                wn += 1;
            }
        } else if y1 <= y && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

fn edge_distance(rings: &[Ring], p: [f64; 2]) -> f64 {
    rings
        .iter()
        .flat_map(|r| r.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
        .fold(f64::INFINITY, f64::min)
}

/// Star polygon about (cx, cy). Angles are jittered around an even spread so
/// consecutive gaps stay under half a turn, keeping the center in the kernel.
fn star(cx: f64, cy: f64, jitter: &[f64], radii: &[f64]) -> Ring {
    let step = TAU / jitter.len() as f64;
    let mut ring: Ring = jitter
        .iter()
        .zip(radii)
        .enumerate()
        .map(|(i, (u, r))| {
            let a = (i as f64 + u) * step;
            [cx + r * a.cos(), cy + r * a.sin()]
        })
        .collect();
    ring.push(ring[0]);
    ring
}

prop_compose! {
    /// A star polygon with its center.
    fn centered_star()(
        cx in -87.9f64..-87.5,
        cy in 41.6f64..42.0,
        n in 5usize..16,
    )(
        cx in Just(cx),
        cy in Just(cy),
        jitter in prop::collection::vec(0.1f64..0.9, n),
        radii in prop::collection::vec(0.005f64..0.1, n),
    ) -> (Ring, [f64; 2]) {
        (star(cx, cy, &jitter, &radii), [cx, cy])
    }
}

fn star_ring() -> impl Strategy<Value = Ring> {
    centered_star().prop_map(|(r, _)| r)
}

fn ll([x, y]: [f64; 2]) -> LatLon {
    LatLon::new(y, x)
}

fn point_near(ring: &Ring) -> impl Strategy<Value = [f64; 2]> {
    let c = ring[0];
    (c[0] - 0.25..c[0] + 0.25, c[1] - 0.25..c[1] + 0.25).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn agrees_with_winding_number(
        (ring, points) in star_ring().prop_flat_map(|r| {
            let pts = prop::collection::vec(point_near(&r), 50);
            (Just(r), pts)
        })
    ) {
        let rings = vec![ring.clone()];
        for p in points {
            if edge_distance(&rings, p) < 1e-9 {
                continue;
            }
            let expected = winding_number(&ring, p[0], p[1]) != 0;
            prop_assert_eq!(point_in_polygon(ll(p), &rings).unwrap(), expected, "point {:?}", p);
        }
    }

    #[test]
    fn holes_subtract(
        (ring, c) in centered_star(),
        scale in 0.05f64..0.5,
        points in prop::collection::vec((-0.12f64..0.12, -0.12f64..0.12), 40),
    ) {
        // shrunk about the kernel point, so nested strictly inside
        let hole: Ring = ring.iter().map(|[x, y]| [c[0] + (x - c[0]) * scale, c[1] + (y - c[1]) * scale]).collect();
        let rings = vec![ring.clone(), hole.clone()];
        for (dx, dy) in points {
            let p = [c[0] + dx, c[1] + dy];
            if edge_distance(&rings, p) < 1e-9 {
                continue;
            }
            let expected = winding_number(&ring, p[0], p[1]) != 0 && winding_number(&hole, p[0], p[1]) == 0;
            prop_assert_eq!(point_in_polygon(ll(p), &rings).unwrap(), expected);
        }
    }

    #[test]
    fn translation_invariant(
        ring in star_ring(),
        p in (-88.0f64..-87.4, 41.5f64..42.1),
        (dx, dy) in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let p = [p.0, p.1];
        let moved: Ring = ring.iter().map(|[x, y]| [x + dx, y + dy]).collect();
        let q = [p[0] + dx, p[1] + dy];
        prop_assume!(edge_distance(std::slice::from_ref(&ring), p) > 1e-9);
        prop_assume!(edge_distance(std::slice::from_ref(&moved), q) > 1e-9);
        prop_assert_eq!(
            point_in_polygon(ll(p), &[ring]).unwrap(),
            point_in_polygon(ll(q), &[moved]).unwrap()
        );
    }

    #[test]
    fn grid_index_matches_linear_scan(
        rings in prop::collection::vec(star_ring(), 1..12),
        points in prop::collection::vec((-88.1f64..-87.3, 41.4f64..42.2), 200),
    ) {
        let set = set_of(rings);
        let classifier = Classifier::new(&set).unwrap();
        for (x, y) in points {
            let p = LatLon::new(y, x);
            prop_assert_eq!(
                classifier.classify(p).map(str::to_string),
                classify_point(p, &set).unwrap()
            );
        }
    }

    #[test]
    fn classification_conserves_trips(
        rings in prop::collection::vec(star_ring(), 1..8),
        points in prop::collection::vec(
            ((-88.1f64..-87.3, 41.4f64..42.2), (-88.1f64..-87.3, 41.4f64..42.2)),
            0..300,
        ),
    ) {
        let set = set_of(rings);
        let trips: Vec<Trip> = points
            .iter()
            .enumerate()
            .map(|(i, &((px, py), (dx, dy)))| trip(i, LatLon::new(py, px), LatLon::new(dy, dx)))
            .collect();
        let n = trips.len();
        let first = classify_trips(trips.clone(), &set).unwrap();
        prop_assert_eq!(first.classified_pickups() + first.unclassified_pickups, n);
        prop_assert_eq!(first.classified_dropoffs() + first.unclassified_dropoffs, n);
        prop_assert_eq!(first.trips.len(), n);
        for (t, orig) in first.trips.iter().zip(&trips) {
            prop_assert_eq!(&t.trip_id, &orig.trip_id);
            prop_assert_eq!(t.pickup_area.clone(), classify_point(t.pickup_point.unwrap(), &set).unwrap());
        }
        // deterministic, and re-classifying labelled trips is a no-op
        let again = classify_trips(trips, &set).unwrap();
        prop_assert_eq!(&again, &first);
        let relabel = classify_trips(first.trips.clone(), &set).unwrap();
        prop_assert_eq!(&relabel.trips, &first.trips);
    }
}

fn set_of(rings: Vec<Ring>) -> NeighborhoodSet {
    NeighborhoodSet::new(
        rings
            .into_iter()
            .enumerate()
            .map(|(i, r)| Neighborhood {
                id: format!("n{i:02}"),
                name: format!("N{i}"),
                rings: vec![r],
            })
            .collect(),
    )
}

fn trip(i: usize, pickup: LatLon, dropoff: LatLon) -> Trip {
    let ts = chrono::NaiveDate::from_ymd_opt(2022, 6, 1)
        .unwrap()
        .and_hms_opt(12, 0, 0)
        .unwrap();
    Trip {
        trip_id: format!("t{i}"),
        start_ts: ts,
        end_ts: ts,
        duration_s: 0.0,
        miles: 0.0,
        fare: 0.0,
        tip: 0.0,
        additional_charges: 0.0,
        total: 0.0,
        pickup_point: Some(pickup),
        dropoff_point: Some(dropoff),
        pickup_area: None,
        dropoff_area: None,
        source: Source::City,
        shared: false,
        weather: None,
    }
}

fn square(x0: f64, y0: f64, size: f64) -> Ring {
    vec![
        [x0, y0],
        [x0 + size, y0],
        [x0 + size, y0 + size],
        [x0, y0 + size],
        [x0, y0],
    ]
}

#[test]
fn boundary_points_count_as_inside() {
    let rings = vec![square(0.0, 0.0, 1.0)];
    for p in [[0.0, 0.0], [0.5, 0.0], [1.0, 0.5], [1.0, 1.0], [0.0, 0.3]] {
        assert!(point_in_polygon(ll(p), &rings).unwrap(), "{p:?}");
    }
    assert!(!point_in_polygon(ll([1.0 + 1e-9, 0.5]), &rings).unwrap());
}

#[test]
fn shared_edge_goes_to_lower_id() {
    let set = NeighborhoodSet::new(vec![
        Neighborhood {
            id: "west".into(),
            name: "West".into(),
            rings: vec![square(0.0, 0.0, 1.0)],
        },
        Neighborhood {
            id: "east".into(),
            name: "East".into(),
            rings: vec![square(1.0, 0.0, 1.0)],
        },
    ]);
    let on_edge = ll([1.0, 0.5]);
    assert_eq!(
        classify_point(on_edge, &set).unwrap().as_deref(),
        Some("east")
    );
    assert_eq!(
        Classifier::new(&set).unwrap().classify(on_edge),
        Some("east")
    );
    assert_eq!(
        classify_point(ll([0.5, 0.5]), &set).unwrap().as_deref(),
        Some("west")
    );
}
