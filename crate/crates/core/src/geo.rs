//! Point-in-polygon classification of trip endpoints into neighborhoods.
//!
//! Geometry is planar in degree space. Containment is even-odd across all
//! rings of an entry (holes subtract), and a point lying on any edge or
//! vertex counts as inside.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LatLon, NeighborhoodSet, Trip};

/// Points closer than this (in degrees) to an edge are treated as on it.
const EDGE_TOLERANCE: f64 = 1e-12;

const MIN_CELL_DEG: f64 = 0.01;
const MAX_CELLS_PER_AXIS: f64 = 512.0;

pub type Ring = Vec<[f64; 2]>;

pub fn validate_ring(ring: &[[f64; 2]], feature: &str) -> Result<()> {
    if ring.len() < 4 {
        return Err(Error::Geometry {
            feature: feature.to_string(),
            message: format!("ring has {} vertices, need at least 4", ring.len()),
        });
    }
    if ring.first() != ring.last() {
        return Err(Error::Geometry {
            feature: feature.to_string(),
            message: "ring is not closed (first vertex != last vertex)".to_string(),
        });
    }
    if ring.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Geometry {
            feature: feature.to_string(),
            message: "ring has non-finite coordinates".to_string(),
        });
    }
    Ok(())
}

/// Even-odd containment of `point` in the union of `rings`, with points on
/// the boundary counted as inside.
pub fn point_in_polygon(point: LatLon, rings: &[Ring]) -> Result<bool> {
    for ring in rings {
        validate_ring(ring, "<rings>")?;
    }
    Ok(contains_unchecked(point, rings))
}

fn contains_unchecked(point: LatLon, rings: &[Ring]) -> bool {
    let (px, py) = (point.lon, point.lat);
    let mut inside = false;
    for ring in rings {
        for edge in ring.windows(2) {
            let [ax, ay] = edge[0];
            let [bx, by] = edge[1];
            if on_segment(px, py, ax, ay, bx, by) {
                return true;
            }
            if (ay > py) != (by > py) {
                let x_cross = ax + (py - ay) * (bx - ax) / (by - ay);
                if px < x_cross {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn on_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    let (dx, dy) = (bx - ax, by - ay);
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return (px - ax).abs() <= EDGE_TOLERANCE && (py - ay).abs() <= EDGE_TOLERANCE;
    }
    let cross = dx * (py - ay) - dy * (px - ax);
    if cross.abs() > EDGE_TOLERANCE * len_sq.sqrt() {
        return false;
    }
    let dot = dx * (px - ax) + dy * (py - ay);
    dot >= -EDGE_TOLERANCE && dot <= len_sq + EDGE_TOLERANCE
}

/// Id of the first entry (ascending id) containing `point`, by linear scan.
pub fn classify_point(point: LatLon, set: &NeighborhoodSet) -> Result<Option<String>> {
    if set.is_empty() {
        return Err(Error::Precondition("neighborhood set is empty".into()));
    }
    let mut entries: Vec<_> = set.entries.iter().collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    for entry in entries {
        for ring in &entry.rings {
            validate_ring(ring, &entry.name)?;
        }
        if contains_unchecked(point, &entry.rings) {
            return Ok(Some(entry.id.clone()));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy)]
struct BBox {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl BBox {
    fn of(rings: &[Ring]) -> Option<BBox> {
        let mut it = rings.iter().flatten();
        let first = it.next()?;
        let mut b = BBox {
            min_x: first[0],
            min_y: first[1],
            max_x: first[0],
            max_y: first[1],
        };
        for c in it {
            b.min_x = b.min_x.min(c[0]);
            b.min_y = b.min_y.min(c[1]);
            b.max_x = b.max_x.max(c[0]);
            b.max_y = b.max_y.max(c[1]);
        }
        Some(b)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x - EDGE_TOLERANCE
            && x <= self.max_x + EDGE_TOLERANCE
            && y >= self.min_y - EDGE_TOLERANCE
            && y <= self.max_y + EDGE_TOLERANCE
    }
}

/// Validated neighborhood set with a uniform grid over entry bounding boxes.
/// Produces the same answers as [`classify_point`].
#[derive(Debug)]
pub struct Classifier<'a> {
    set: &'a NeighborhoodSet,
    order: Vec<usize>,
    boxes: Vec<BBox>,
    origin: (f64, f64),
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> Classifier<'a> {
    pub fn new(set: &'a NeighborhoodSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Precondition("neighborhood set is empty".into()));
        }
        let mut order: Vec<usize> = (0..set.entries.len()).collect();
        order.sort_by(|&a, &b| set.entries[a].id.cmp(&set.entries[b].id));

        let mut boxes = Vec::with_capacity(order.len());
        for &i in &order {
            let entry = &set.entries[i];
            for ring in &entry.rings {
                validate_ring(ring, &entry.name)?;
            }
            let bbox = BBox::of(&entry.rings).ok_or_else(|| Error::Geometry {
                feature: entry.name.clone(),
                message: "entry has no rings".into(),
            })?;
            boxes.push(bbox);
        }

        let min_x = boxes.iter().map(|b| b.min_x).fold(f64::INFINITY, f64::min);
        let min_y = boxes.iter().map(|b| b.min_y).fold(f64::INFINITY, f64::min);
        let max_x = boxes
            .iter()
            .map(|b| b.max_x)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_y = boxes
            .iter()
            .map(|b| b.max_y)
            .fold(f64::NEG_INFINITY, f64::max);
        let extent = (max_x - min_x).max(max_y - min_y);
        let cell = MIN_CELL_DEG.max(extent / MAX_CELLS_PER_AXIS);
        let origin = (min_x, min_y);

        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |v: f64, o: f64| ((v - o) / cell).floor() as i64;
        for (slot, b) in boxes.iter().enumerate() {
            let (x0, x1) = (
                key(b.min_x - EDGE_TOLERANCE, origin.0),
                key(b.max_x + EDGE_TOLERANCE, origin.0),
            );
            let (y0, y1) = (
                key(b.min_y - EDGE_TOLERANCE, origin.1),
                key(b.max_y + EDGE_TOLERANCE, origin.1),
            );
            for cx in x0..=x1 {
                for cy in y0..=y1 {
                    cells.entry((cx, cy)).or_default().push(slot);
                }
            }
        }

        Ok(Self {
            set,
            order,
            boxes,
            origin,
            cell,
            cells,
        })
    }

    pub fn classify(&self, point: LatLon) -> Option<&'a str> {
        let (x, y) = (point.lon, point.lat);
        if !x.is_finite() || !y.is_finite() {
            return None;
        }
        let cx = ((x - self.origin.0) / self.cell).floor() as i64;
        let cy = ((y - self.origin.1) / self.cell).floor() as i64;
        // Slots are pushed in ascending id order, so the first hit wins.
        let candidates = self.cells.get(&(cx, cy))?;
        candidates
            .iter()
            .copied()
            .filter(|&slot| self.boxes[slot].contains(x, y))
            .map(|slot| &self.set.entries[self.order[slot]])
            .find(|entry| contains_unchecked(point, &entry.rings))
            .map(|entry| entry.id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub trips: Vec<Trip>,
    pub unclassified_pickups: usize,
    pub unclassified_dropoffs: usize,
}

impl ClassificationResult {
    /// Trips whose pickup has an area label and a point (the classified side
    /// of the conservation identity).
    pub fn classified_pickups(&self) -> usize {
        self.trips
            .iter()
            .filter(|t| t.pickup_point.is_some() && t.pickup_area.is_some())
            .count()
    }

    pub fn classified_dropoffs(&self) -> usize {
        self.trips
            .iter()
            .filter(|t| t.dropoff_point.is_some() && t.dropoff_area.is_some())
            .count()
    }
}

/// Label pickup and drop-off areas from coordinates. Trips that already
/// carry an area label keep it.
pub fn classify_trips(mut trips: Vec<Trip>, set: &NeighborhoodSet) -> Result<ClassificationResult> {
    let classifier = Classifier::new(set)?;
    let (unclassified_pickups, unclassified_dropoffs) = trips
        .par_iter_mut()
        .map(|trip| {
            let pickup = label(&classifier, trip.pickup_point, &mut trip.pickup_area);
            let dropoff = label(&classifier, trip.dropoff_point, &mut trip.dropoff_area);
            (usize::from(!pickup), usize::from(!dropoff))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    Ok(ClassificationResult {
        trips,
        unclassified_pickups,
        unclassified_dropoffs,
    })
}

/// Returns false only when a point was present and no entry contained it.
fn label(classifier: &Classifier<'_>, point: Option<LatLon>, area: &mut Option<String>) -> bool {
    if area.is_some() {
        return true;
    }
    match point {
        None => true,
        Some(p) => match classifier.classify(p) {
            Some(id) => {
                *area = Some(id.to_string());
                true
            }
            None => false,
        },
    }
}
