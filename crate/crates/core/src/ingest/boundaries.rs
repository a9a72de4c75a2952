use std::collections::HashMap;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geo::{validate_ring, Ring};
use crate::model::{Neighborhood, NeighborhoodSet};

/// Which feature properties carry the display name, tried in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryOptions {
    pub name_properties: Vec<String>,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self {
            name_properties: ["pri_neigh", "name", "NAME", "community"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

pub fn load_boundaries(path: &Path) -> Result<NeighborhoodSet> {
    load_boundaries_with(path, &BoundaryOptions::default())
}

pub fn load_boundaries_with(path: &Path, opts: &BoundaryOptions) -> Result<NeighborhoodSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Geometry {
            feature: path.display().to_string(),
            message: "document has no `features` array".into(),
        })?;

    let mut used: HashMap<String, usize> = HashMap::new();
    let mut entries = Vec::with_capacity(features.len());
    for (i, feature) in features.iter().enumerate() {
        let name = feature_name(feature, opts).ok_or_else(|| Error::Geometry {
            feature: format!("feature #{i}"),
            message: format!("no name property among {:?}", opts.name_properties),
        })?;
        let rings = feature_rings(feature, &name)?;

        let base = slugify(&name);
        let seen = used.entry(base.clone()).or_insert(0);
        *seen += 1;
        let id = if *seen == 1 {
            base
        } else {
            warn!("duplicate neighborhood name `{name}`; assigning id `{base}_{seen}`");
            format!("{base}_{seen}")
        };
        entries.push(Neighborhood { id, name, rings });
    }
    Ok(NeighborhoodSet::new(entries))
}

fn feature_name(feature: &Value, opts: &BoundaryOptions) -> Option<String> {
    let props = feature.get("properties")?;
    opts.name_properties
        .iter()
        .filter_map(|key| props.get(key))
        .find_map(|v| match v {
            Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        })
}

fn feature_rings(feature: &Value, name: &str) -> Result<Vec<Ring>> {
    let err = |message: &str| Error::Geometry {
        feature: name.to_string(),
        message: message.to_string(),
    };
    let geometry = feature
        .get("geometry")
        .ok_or_else(|| err("missing geometry"))?;
    let kind = geometry
        .get("type")
        .and_then(Value::as_str)
        .unwrap_or_default();
    let coords = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| err("missing coordinates"))?;

    let polygons: Vec<&Vec<Value>> = match kind {
        "Polygon" => vec![coords],
        "MultiPolygon" => coords
            .iter()
            .map(|p| p.as_array().ok_or_else(|| err("malformed polygon")))
            .collect::<Result<_>>()?,
        other => return Err(err(&format!("unsupported geometry type `{other}`"))),
    };

    let mut rings = Vec::new();
    for polygon in polygons {
        for ring in polygon {
            let ring = ring
                .as_array()
                .ok_or_else(|| err("malformed ring"))?
                .iter()
                .map(|pos| {
                    let pos = pos.as_array().filter(|p| p.len() >= 2);
                    match pos.map(|p| (p[0].as_f64(), p[1].as_f64())) {
                        Some((Some(lon), Some(lat))) => Ok([lon, lat]),
                        _ => Err(err("malformed position")),
                    }
                })
                .collect::<Result<Ring>>()?;
            validate_ring(&ring, name)?;
            rings.push(ring);
        }
    }
    if rings.is_empty() {
        return Err(err("geometry has no rings"));
    }
    Ok(rings)
}

/// Stable identifier derived from a display name.
pub fn slugify(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_sep = false;
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
            pending_sep = false;
        } else {
            pending_sep = true;
        }
    }
    if out.is_empty() {
        out.push_str("unnamed");
    }
    out
}
