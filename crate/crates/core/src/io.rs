//! JSON formats for instances and solutions.
//!
//! Instance file:
//!
//! ```json
//! { "version": 1, "name": "basis_small_0", "n_d": 16, "n_r": 9,
//!   "depot_start": 4, "depot_target": 4, "e_max": 1000.0,
//!   "destinations": [[x, y], ...], "rls": [[x, y], ...],
//!   "rover_speed": 0.5,
//!   "metrics": { "drone": "euclidean", "rover": "manhattan" },
//!   "c_d": [[...]], "c_r": [[...]] }
//! ```
//!
//! `c_d` / `c_r` are optional; when present they override the coordinate
//! metrics. All indices are 0-based; in `c_d` destinations come before RLs.
//! Setting `"metric_closure": true` replaces both matrices by their
//! shortest-path closure before validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    euclidean, manhattan, metric_closure, DroneTour, Instance, InstanceParts, Metric, Operation,
    RechargingLeg, TourElement,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct Metrics {
    drone: Metric,
    rover: Metric,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    name: String,
    n_d: usize,
    n_r: usize,
    depot_start: usize,
    depot_target: usize,
    e_max: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    destinations: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    rls: Vec<[f64; 2]>,
    #[serde(default = "one")]
    rover_speed: f64,
    metrics: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_d: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_r: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    metric_closure: bool,
}

const REQUIRED_INSTANCE_FIELDS: [&str; 8] = [
    "version",
    "name",
    "n_d",
    "n_r",
    "depot_start",
    "depot_target",
    "e_max",
    "metrics",
];

fn require_fields(value: &Value, fields: &[&str], context: &str) -> Result<()> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema(context, "expected a JSON object"))?;
    for f in fields {
        if !obj.contains_key(*f) {
            let field = if context.is_empty() {
                f.to_string()
            } else {
                format!("{context}.{f}")
            };
            return Err(Error::schema(field, "missing required field"));
        }
    }
    Ok(())
}

fn square(rows: Vec<Vec<f64>>, n: usize, field: &str) -> Result<Vec<f64>> {
    if rows.len() != n {
        return Err(Error::schema(
            field,
            format!("expected {n} rows, found {}", rows.len()),
        ));
    }
    let mut flat = Vec::with_capacity(n * n);
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != n {
            return Err(Error::schema(
                format!("{field}[{i}]"),
                format!("expected {n} entries, found {}", row.len()),
            ));
        }
        flat.extend(row);
    }
    Ok(flat)
}

fn distance_fn(metric: Metric, field: &str) -> Result<fn([f64; 2], [f64; 2]) -> f64> {
    match metric {
        Metric::Euclidean => Ok(euclidean),
        Metric::Manhattan => Ok(manhattan),
        Metric::Matrix => Err(Error::schema(field, "matrix metric requires an explicit matrix")),
    }
}

fn to_rows(flat: &[f64], n: usize) -> Vec<Vec<f64>> {
    flat.chunks(n).map(|r| r.to_vec()).collect()
}

/// Parses and validates an instance document.
pub fn instance_from_json(text: &str) -> Result<Instance> {
    let value: Value = serde_json::from_str(text)?;
    require_fields(&value, &REQUIRED_INSTANCE_FIELDS, "")?;
    require_fields(&value["metrics"], &["drone", "rover"], "metrics")?;
    let file: InstanceFile = serde_json::from_value(value).map_err(|e| Error::schema("<document>", e))?;
    if file.version != FORMAT_VERSION {
        return Err(Error::schema(
            "version",
            format!("unsupported version {} (expected {FORMAT_VERSION})", file.version),
        ));
    }
    let (n_d, n_r) = (file.n_d, file.n_r);
    if !file.destinations.is_empty() && file.destinations.len() != n_d {
        return Err(Error::schema(
            "destinations",
            format!("{} coordinates for n_d = {n_d}", file.destinations.len()),
        ));
    }
    if !file.rls.is_empty() && file.rls.len() != n_r {
        return Err(Error::schema(
            "rls",
            format!("{} coordinates for n_r = {n_r}", file.rls.len()),
        ));
    }
    let n = n_d + n_r;
    let mut drone = match file.c_d {
        Some(rows) => square(rows, n, "c_d")?,
        None => {
            if file.destinations.len() != n_d || file.rls.len() != n_r {
                return Err(Error::schema("c_d", "needed when coordinates are absent"));
            }
            let dist = distance_fn(file.metrics.drone, "metrics.drone")?;
            let nodes: Vec<[f64; 2]> = file.destinations.iter().chain(file.rls.iter()).copied().collect();
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = dist(nodes[i], nodes[j]);
                }
            }
            m
        }
    };
    let mut rover = match file.c_r {
        Some(rows) => square(rows, n_r, "c_r")?,
        None => {
            if file.rls.len() != n_r {
                return Err(Error::schema("c_r", "needed when RL coordinates are absent"));
            }
            if !(file.rover_speed > 0.0) {
                return Err(Error::schema("rover_speed", "must be positive"));
            }
            let dist = distance_fn(file.metrics.rover, "metrics.rover")?;
            let mut m = vec![0.0; n_r * n_r];
            for i in 0..n_r {
                for j in 0..n_r {
                    m[i * n_r + j] = dist(file.rls[i], file.rls[j]) / file.rover_speed;
                }
            }
            m
        }
    };
    if file.metric_closure {
        metric_closure(&mut drone, n);
        metric_closure(&mut rover, n_r);
    }
    Instance::new(InstanceParts {
        name: file.name,
        n_d,
        n_r,
        depot_start: file.depot_start,
        depot_target: file.depot_target,
        e_max: file.e_max,
        destinations: file.destinations,
        rls: file.rls,
        rover_speed: file.rover_speed,
        drone_metric: file.metrics.drone,
        rover_metric: file.metrics.rover,
        drone,
        rover,
    })
}

/// Whether rebuilding the matrices from the instance's coordinates and
/// metrics yields exactly the stored matrices.
fn coordinates_reproduce(inst: &Instance) -> (bool, bool) {
    let (n_d, n_r) = (inst.n_d(), inst.n_r());
    let n = n_d + n_r;
    let has_coords = inst.destinations().len() == n_d && inst.rls().len() == n_r;
    let drone_ok = has_coords
        && match distance_fn(inst.drone_metric(), "") {
            Ok(dist) => {
                let nodes: Vec<[f64; 2]> = inst
                    .destinations()
                    .iter()
                    .chain(inst.rls().iter())
                    .copied()
                    .collect();
                (0..n).all(|i| (0..n).all(|j| dist(nodes[i], nodes[j]) == inst.drone_matrix()[i * n + j]))
            }
            Err(_) => false,
        };
    let rover_ok = inst.rls().len() == n_r
        && match distance_fn(inst.rover_metric(), "") {
            Ok(dist) => (0..n_r).all(|i| {
                (0..n_r).all(|j| {
                    dist(inst.rls()[i], inst.rls()[j]) / inst.rover_speed()
                        == inst.rover_matrix()[i * n_r + j]
                })
            }),
            Err(_) => false,
        };
    (drone_ok, rover_ok)
}

/// Serializes an instance; matrices are written only when the coordinates
/// do not reproduce them bit for bit.
pub fn instance_to_json(inst: &Instance) -> String {
    let (drone_ok, rover_ok) = coordinates_reproduce(inst);
    let n = inst.n_d() + inst.n_r();
    let file = InstanceFile {
        version: FORMAT_VERSION,
        name: inst.name().to_string(),
        n_d: inst.n_d(),
        n_r: inst.n_r(),
        depot_start: inst.depot_start(),
        depot_target: inst.depot_target(),
        e_max: inst.e_max(),
        destinations: inst.destinations().to_vec(),
        rls: inst.rls().to_vec(),
        rover_speed: inst.rover_speed(),
        metrics: Metrics {
            drone: inst.drone_metric(),
            rover: inst.rover_metric(),
        },
        c_d: (!drone_ok).then(|| to_rows(inst.drone_matrix(), n)),
        c_r: (!rover_ok).then(|| to_rows(inst.rover_matrix(), inst.n_r())),
        metric_closure: false,
    };
    serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    instance_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    std::fs::write(path, instance_to_json(inst) + "\n")?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ElementFile {
    Leg {
        from: usize,
        to: usize,
    },
    Op {
        start: usize,
        dests: Vec<usize>,
        end: usize,
    },
}

/// Solution document; metadata fields are informational.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct SolutionMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SolutionFile {
    #[serde(flatten)]
    meta: SolutionMeta,
    makespan: f64,
    elements: Vec<ElementFile>,
}

pub fn tour_to_json(tour: &DroneTour, meta: SolutionMeta) -> String {
    let elements = tour
        .elements
        .iter()
        .map(|e| match e {
            TourElement::Leg(l) => ElementFile::Leg {
                from: l.from_rl,
                to: l.to_rl,
            },
            TourElement::Op(o) => ElementFile::Op {
                start: o.start_rl,
                dests: o.destinations.clone(),
                end: o.end_rl,
            },
        })
        .collect();
    let file = SolutionFile {
        meta,
        makespan: tour.makespan,
        elements,
    };
    serde_json::to_string_pretty(&file).expect("solution serialization cannot fail")
}

/// Parses a solution; the stored makespan is kept as given so that
/// validation can compare it with a recomputation.
pub fn tour_from_json(text: &str) -> Result<(DroneTour, SolutionMeta)> {
    let value: Value = serde_json::from_str(text)?;
    require_fields(&value, &["makespan", "elements"], "")?;
    if let Some(items) = value["elements"].as_array() {
        for (i, item) in items.iter().enumerate() {
            let ctx = format!("elements[{i}]");
            require_fields(item, &["type"], &ctx)?;
            match item["type"].as_str() {
                Some("leg") => require_fields(item, &["from", "to"], &ctx)?,
                Some("op") => require_fields(item, &["start", "dests", "end"], &ctx)?,
                _ => return Err(Error::schema(format!("{ctx}.type"), "expected \"leg\" or \"op\"")),
            }
        }
    }
    let file: SolutionFile = serde_json::from_value(value).map_err(|e| Error::schema("<document>", e))?;
    let elements = file
        .elements
        .into_iter()
        .map(|e| match e {
            ElementFile::Leg { from, to } => TourElement::Leg(RechargingLeg::new(from, to)),
            ElementFile::Op { start, dests, end } => TourElement::Op(Operation::new(start, dests, end)),
        })
        .collect();
    Ok((
        DroneTour {
            elements,
            makespan: file.makespan,
        },
        file.meta,
    ))
}

pub fn load_tour(path: impl AsRef<Path>) -> Result<(DroneTour, SolutionMeta)> {
    tour_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_tour(path: impl AsRef<Path>, tour: &DroneTour, meta: SolutionMeta) -> Result<()> {
    std::fs::write(path, tour_to_json(tour, meta) + "\n")?;
    Ok(())
}
