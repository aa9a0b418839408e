//! Domain types of the routing problem: instances, operations, recharging
//! legs, drone tours, and the arithmetic that prices and validates them.
//!
//! Node numbering inside the drone matrix puts the `n_d` destinations first
//! (ids `0..n_d`) followed by the `n_r` replenishment locations
//! (ids `n_d..n_d + n_r`). RL indices handed to the public API are always
//! `0..n_r`.

use serde::{Deserialize, Serialize};

use crate::energy::ExtendedCosts;
use crate::error::{Error, Result};

/// Equality tolerance used for every time and energy comparison.
pub const EPS: f64 = 1e-9;

/// How a travel-time matrix was derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Matrix,
}

/// Pricing rules for operations.
///
/// `Base` is the plain makespan model (flight time bounded by `e_max`,
/// operation makespan `max(C_d, c_r)`). `Extended` adds takeoff, landing,
/// swap and hover costs with an energy budget in milliamp-seconds.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum CostModel {
    #[default]
    Base,
    Extended(ExtendedCosts),
}

/// Raw ingredients of an [`Instance`]; validated by [`Instance::new`].
#[derive(Clone, Debug)]
pub struct InstanceParts {
    pub name: String,
    pub n_d: usize,
    pub n_r: usize,
    pub depot_start: usize,
    pub depot_target: usize,
    pub e_max: f64,
    pub destinations: Vec<[f64; 2]>,
    pub rls: Vec<[f64; 2]>,
    pub rover_speed: f64,
    pub drone_metric: Metric,
    pub rover_metric: Metric,
    /// Row-major `(n_d + n_r)²` drone flight times.
    pub drone: Vec<f64>,
    /// Row-major `n_r²` rover travel times.
    pub rover: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    name: String,
    n_d: usize,
    n_r: usize,
    depot_start: usize,
    depot_target: usize,
    e_max: f64,
    destinations: Vec<[f64; 2]>,
    rls: Vec<[f64; 2]>,
    rover_speed: f64,
    drone_metric: Metric,
    rover_metric: Metric,
    drone: Vec<f64>,
    rover: Vec<f64>,
    nearest: Vec<(usize, f64)>,
    model: CostModel,
}

pub fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn manhattan(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

/// All-pairs shortest paths (Floyd-Warshall) in place on a row-major `n × n` matrix.
pub fn metric_closure(matrix: &mut [f64], n: usize) {
    assert_eq!(matrix.len(), n * n, "matrix must be n×n");
    for k in 0..n {
        for i in 0..n {
            let ik = matrix[i * n + k];
            if !ik.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = ik + matrix[k * n + j];
                if via < matrix[i * n + j] {
                    matrix[i * n + j] = via;
                }
            }
        }
    }
}

fn check_metric(matrix: &[f64], n: usize, what: &str) -> Result<()> {
    for i in 0..n {
        if matrix[i * n + i] != 0.0 {
            return Err(Error::InvalidInstance(format!(
                "{what}: diagonal entry ({i},{i}) is {} (must be 0)",
                matrix[i * n + i]
            )));
        }
        for j in 0..n {
            let v = matrix[i * n + j];
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "{what}: entry ({i},{j}) = {v} must be finite and nonnegative"
                )));
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let ik = matrix[i * n + k];
            for j in 0..n {
                let direct = matrix[i * n + j];
                let via = ik + matrix[k * n + j];
                if direct > via + EPS * direct.max(1.0) {
                    return Err(Error::InvalidInstance(format!(
                        "{what}: triangle inequality violated: c({i},{j}) = {direct} > c({i},{k}) + c({k},{j}) = {via}"
                    )));
                }
            }
        }
    }
    Ok(())
}

impl Instance {
    /// Validates every instance invariant and caches the nearest RL per destination.
    pub fn new(parts: InstanceParts) -> Result<Self> {
        let InstanceParts {
            name,
            n_d,
            n_r,
            depot_start,
            depot_target,
            e_max,
            destinations,
            rls,
            rover_speed,
            drone_metric,
            rover_metric,
            drone,
            rover,
        } = parts;
        if n_r == 0 {
            return Err(Error::InvalidInstance("at least one RL is required".into()));
        }
        let n = n_d + n_r;
        if drone.len() != n * n {
            return Err(Error::InvalidInstance(format!(
                "drone matrix has {} entries, expected {}",
                drone.len(),
                n * n
            )));
        }
        if rover.len() != n_r * n_r {
            return Err(Error::InvalidInstance(format!(
                "rover matrix has {} entries, expected {}",
                rover.len(),
                n_r * n_r
            )));
        }
        if !destinations.is_empty() && destinations.len() != n_d {
            return Err(Error::InvalidInstance(
                "destination coordinate count mismatch".into(),
            ));
        }
        if !rls.is_empty() && rls.len() != n_r {
            return Err(Error::InvalidInstance("RL coordinate count mismatch".into()));
        }
        if depot_start >= n_r || depot_target >= n_r {
            return Err(Error::InvalidInstance(format!(
                "depots ({depot_start}, {depot_target}) out of range for {n_r} RLs"
            )));
        }
        if !(e_max > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "e_max must be positive, got {e_max}"
            )));
        }
        check_metric(&drone, n, "drone matrix")?;
        check_metric(&rover, n_r, "rover matrix")?;

        let mut nearest = Vec::with_capacity(n_d);
        for v in 0..n_d {
            let (w, to) = (0..n_r)
                .map(|w| (w, drone[v * n + n_d + w]))
                .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            let round = (0..n_r)
                .map(|w| drone[(n_d + w) * n + v] + drone[v * n + n_d + w])
                .fold(f64::INFINITY, f64::min);
            if round > e_max + EPS {
                return Err(Error::InvalidInstance(format!(
                    "destination {v} is not reachable in a return flight from any RL (needs {round}, e_max {e_max})"
                )));
            }
            nearest.push((w, to));
        }

        Ok(Instance {
            name,
            n_d,
            n_r,
            depot_start,
            depot_target,
            e_max,
            destinations,
            rls,
            rover_speed,
            drone_metric,
            rover_metric,
            drone,
            rover,
            nearest,
            model: CostModel::Base,
        })
    }

    /// Builds the drone metric from coordinates (Euclidean, speed 1) and the rover
    /// metric from `rover_metric` scaled by `1 / rover_speed`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_coordinates(
        name: impl Into<String>,
        destinations: Vec<[f64; 2]>,
        rls: Vec<[f64; 2]>,
        depot_start: usize,
        depot_target: usize,
        e_max: f64,
        rover_speed: f64,
        rover_metric: Metric,
    ) -> Result<Self> {
        if !(rover_speed > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "rover speed must be positive, got {rover_speed}"
            )));
        }
        let rover_distance = match rover_metric {
            Metric::Euclidean => euclidean,
            Metric::Manhattan => manhattan,
            Metric::Matrix => {
                return Err(Error::InvalidInstance(
                    "matrix rover metric requires explicit matrices".into(),
                ))
            }
        };
        let n_d = destinations.len();
        let n_r = rls.len();
        let nodes: Vec<[f64; 2]> = destinations.iter().chain(rls.iter()).copied().collect();
        let n = nodes.len();
        let mut drone = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                drone[i * n + j] = euclidean(nodes[i], nodes[j]);
            }
        }
        let mut rover = vec![0.0; n_r * n_r];
        for i in 0..n_r {
            for j in 0..n_r {
                rover[i * n_r + j] = rover_distance(rls[i], rls[j]) / rover_speed;
            }
        }
        Instance::new(InstanceParts {
            name: name.into(),
            n_d,
            n_r,
            depot_start,
            depot_target,
            e_max,
            destinations,
            rls,
            rover_speed,
            drone_metric: Metric::Euclidean,
            rover_metric,
            drone,
            rover,
        })
    }

    /// Instance given by explicit matrices; coordinates are left empty.
    #[allow(clippy::too_many_arguments)]
    pub fn from_matrices(
        name: impl Into<String>,
        n_d: usize,
        n_r: usize,
        depot_start: usize,
        depot_target: usize,
        e_max: f64,
        drone: Vec<f64>,
        rover: Vec<f64>,
    ) -> Result<Self> {
        Instance::new(InstanceParts {
            name: name.into(),
            n_d,
            n_r,
            depot_start,
            depot_target,
            e_max,
            destinations: Vec::new(),
            rls: Vec::new(),
            rover_speed: 1.0,
            drone_metric: Metric::Matrix,
            rover_metric: Metric::Matrix,
            drone,
            rover,
        })
    }

    /// Same instance priced under `model`.
    pub fn with_model(mut self, model: CostModel) -> Self {
        self.model = model;
        self
    }

    /// Same instance with a different flight-time limit. Fails if some destination
    /// becomes unreachable.
    pub fn with_e_max(&self, e_max: f64) -> Result<Self> {
        let mut parts = self.parts();
        parts.e_max = e_max;
        Ok(Instance::new(parts)?.with_model(self.model.clone()))
    }

    /// Same instance with depots moved.
    pub fn with_depots(&self, depot_start: usize, depot_target: usize) -> Result<Self> {
        let mut parts = self.parts();
        parts.depot_start = depot_start;
        parts.depot_target = depot_target;
        Ok(Instance::new(parts)?.with_model(self.model.clone()))
    }

    pub fn parts(&self) -> InstanceParts {
        InstanceParts {
            name: self.name.clone(),
            n_d: self.n_d,
            n_r: self.n_r,
            depot_start: self.depot_start,
            depot_target: self.depot_target,
            e_max: self.e_max,
            destinations: self.destinations.clone(),
            rls: self.rls.clone(),
            rover_speed: self.rover_speed,
            drone_metric: self.drone_metric,
            rover_metric: self.rover_metric,
            drone: self.drone.clone(),
            rover: self.rover.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n_d(&self) -> usize {
        self.n_d
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn depot_start(&self) -> usize {
        self.depot_start
    }
    pub fn depot_target(&self) -> usize {
        self.depot_target
    }
    pub fn e_max(&self) -> f64 {
        self.e_max
    }
    pub fn destinations(&self) -> &[[f64; 2]] {
        &self.destinations
    }
    pub fn rls(&self) -> &[[f64; 2]] {
        &self.rls
    }
    pub fn rover_speed(&self) -> f64 {
        self.rover_speed
    }
    pub fn drone_metric(&self) -> Metric {
        self.drone_metric
    }
    pub fn rover_metric(&self) -> Metric {
        self.rover_metric
    }
    pub fn drone_matrix(&self) -> &[f64] {
        &self.drone
    }
    pub fn rover_matrix(&self) -> &[f64] {
        &self.rover
    }
    pub fn model(&self) -> &CostModel {
        &self.model
    }

    #[inline]
    fn nodes(&self) -> usize {
        self.n_d + self.n_r
    }

    /// Flight time between two destinations.
    #[inline]
    pub fn fly_dd(&self, a: usize, b: usize) -> f64 {
        self.drone[a * self.nodes() + b]
    }

    /// Flight time from RL `w` to destination `v`.
    #[inline]
    pub fn fly_rd(&self, w: usize, v: usize) -> f64 {
        self.drone[(self.n_d + w) * self.nodes() + v]
    }

    /// Flight time from destination `v` to RL `w`.
    #[inline]
    pub fn fly_dr(&self, v: usize, w: usize) -> f64 {
        self.drone[v * self.nodes() + self.n_d + w]
    }

    /// Rover travel time between RLs.
    #[inline]
    pub fn drive(&self, a: usize, b: usize) -> f64 {
        self.rover[a * self.n_r + b]
    }

    /// Closest RL (by flight time from `v`) and that flight time.
    #[inline]
    pub fn nearest_rl(&self, v: usize) -> (usize, f64) {
        self.nearest[v]
    }

    /// Upper bound on the flight time of any feasible operation; used for
    /// forward pruning of partial operations.
    pub fn flight_budget(&self) -> f64 {
        match &self.model {
            CostModel::Base => self.e_max,
            CostModel::Extended(c) => c.max_flight_time(),
        }
    }

    /// Whether an operation from `w` to `w2` with the given flight time is feasible.
    #[inline]
    pub fn op_feasible(&self, w: usize, w2: usize, flight: f64) -> bool {
        match &self.model {
            CostModel::Base => flight <= self.e_max + EPS,
            CostModel::Extended(c) => c.feasible(flight, self.drive(w, w2)),
        }
    }

    /// Makespan of an operation from `w` to `w2` given its flight time.
    #[inline]
    pub fn op_makespan(&self, w: usize, w2: usize, flight: f64) -> f64 {
        match &self.model {
            CostModel::Base => flight.max(self.drive(w, w2)),
            CostModel::Extended(c) => c.makespan(flight, self.drive(w, w2)),
        }
    }
}

/// A drone sortie `w → s_1 → … → s_k → w'`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Operation {
    pub start_rl: usize,
    pub destinations: Vec<usize>,
    pub end_rl: usize,
}

impl Operation {
    pub fn new(start_rl: usize, destinations: Vec<usize>, end_rl: usize) -> Self {
        Operation {
            start_rl,
            destinations,
            end_rl,
        }
    }

    fn check(&self, inst: &Instance) -> Result<()> {
        if self.destinations.is_empty() {
            return Err(Error::InvalidOperation("operation visits no destination".into()));
        }
        if self.start_rl >= inst.n_r() || self.end_rl >= inst.n_r() {
            return Err(Error::InvalidOperation(format!(
                "RL index out of range in ({}, …, {})",
                self.start_rl, self.end_rl
            )));
        }
        if let Some(&v) = self.destinations.iter().find(|&&v| v >= inst.n_d()) {
            return Err(Error::InvalidOperation(format!("destination {v} out of range")));
        }
        Ok(())
    }
}

/// Rover movement with the drone on board; `from_rl == to_rl` is the trivial leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RechargingLeg {
    pub from_rl: usize,
    pub to_rl: usize,
}

impl RechargingLeg {
    pub fn new(from_rl: usize, to_rl: usize) -> Self {
        RechargingLeg { from_rl, to_rl }
    }

    pub fn trivial(rl: usize) -> Self {
        RechargingLeg::new(rl, rl)
    }

    pub fn is_trivial(&self) -> bool {
        self.from_rl == self.to_rl
    }

    pub fn makespan(&self, inst: &Instance) -> f64 {
        if self.is_trivial() {
            0.0
        } else {
            inst.drive(self.from_rl, self.to_rl)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TourElement {
    Leg(RechargingLeg),
    Op(Operation),
}

impl TourElement {
    pub fn start_rl(&self) -> usize {
        match self {
            TourElement::Leg(l) => l.from_rl,
            TourElement::Op(o) => o.start_rl,
        }
    }

    pub fn end_rl(&self) -> usize {
        match self {
            TourElement::Leg(l) => l.to_rl,
            TourElement::Op(o) => o.end_rl,
        }
    }
}

/// Alternating sequence `leg, op, leg, …, op, leg` with its cached makespan.
#[derive(Clone, Debug, PartialEq)]
pub struct DroneTour {
    pub elements: Vec<TourElement>,
    pub makespan: f64,
}

impl DroneTour {
    /// Prices `elements` with [`tour_makespan`].
    pub fn from_elements(elements: Vec<TourElement>, inst: &Instance) -> Result<Self> {
        let mut tour = DroneTour {
            elements,
            makespan: 0.0,
        };
        tour.makespan = tour_makespan(&tour, inst)?;
        Ok(tour)
    }

    /// Builds the strictly alternating tour that performs `ops` in order,
    /// joining consecutive operations (and the depots) with two-node legs.
    pub fn from_operations(ops: Vec<Operation>, inst: &Instance) -> Result<Self> {
        let mut elements = Vec::with_capacity(2 * ops.len() + 1);
        let mut at = inst.depot_start();
        for op in ops {
            elements.push(TourElement::Leg(RechargingLeg::new(at, op.start_rl)));
            at = op.end_rl;
            elements.push(TourElement::Op(op));
        }
        elements.push(TourElement::Leg(RechargingLeg::new(at, inst.depot_target())));
        DroneTour::from_elements(elements, inst)
    }

    pub fn operations(&self) -> impl Iterator<Item = &Operation> {
        self.elements.iter().filter_map(|e| match e {
            TourElement::Op(o) => Some(o),
            TourElement::Leg(_) => None,
        })
    }

    pub fn legs(&self) -> impl Iterator<Item = &RechargingLeg> {
        self.elements.iter().filter_map(|e| match e {
            TourElement::Leg(l) => Some(l),
            TourElement::Op(_) => None,
        })
    }

    /// Destinations in visiting order.
    pub fn destination_order(&self) -> Vec<usize> {
        self.operations()
            .flat_map(|o| o.destinations.iter().copied())
            .collect()
    }

    /// Drops every trivial leg that is not needed for alternation.
    pub fn without_redundant_legs(&self) -> Vec<TourElement> {
        let mut out: Vec<TourElement> = Vec::with_capacity(self.elements.len());
        for e in &self.elements {
            if let (TourElement::Leg(l), Some(TourElement::Leg(_))) = (e, out.last()) {
                if l.is_trivial() {
                    continue;
                }
            }
            out.push(e.clone());
        }
        out
    }
}

/// Drone flight time `C_d(o)`.
pub fn operation_flight_time(op: &Operation, inst: &Instance) -> Result<f64> {
    op.check(inst)?;
    let d = &op.destinations;
    let mut t = inst.fly_rd(op.start_rl, d[0]);
    for pair in d.windows(2) {
        t += inst.fly_dd(pair[0], pair[1]);
    }
    t += inst.fly_dr(d[d.len() - 1], op.end_rl);
    Ok(t)
}

/// Operation makespan: slower of drone and rover (plus the extended charges
/// when the instance uses the extended model).
pub fn operation_makespan(op: &Operation, inst: &Instance) -> Result<f64> {
    let flight = operation_flight_time(op, inst)?;
    Ok(inst.op_makespan(op.start_rl, op.end_rl, flight))
}

/// Sum of operation and leg makespans, in element order.
pub fn tour_makespan(tour: &DroneTour, inst: &Instance) -> Result<f64> {
    let mut total = 0.0;
    let mut at: Option<usize> = None;
    for (i, e) in tour.elements.iter().enumerate() {
        if let Some(prev) = at {
            if prev != e.start_rl() {
                return Err(Error::Structure(format!(
                    "element {i} starts at RL {} but the previous element ends at RL {prev}",
                    e.start_rl()
                )));
            }
        }
        match e {
            TourElement::Leg(l) => {
                if l.from_rl >= inst.n_r() || l.to_rl >= inst.n_r() {
                    return Err(Error::Structure(format!("leg {i} references an unknown RL")));
                }
                total += l.makespan(inst);
            }
            TourElement::Op(o) => total += operation_makespan(o, inst)?,
        }
        at = Some(e.end_rl());
    }
    Ok(total)
}

/// Outcome of [`validate_tour`]; every check is reported independently.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub coverage: bool,
    pub uniqueness: bool,
    pub chaining: bool,
    pub depots: bool,
    pub energy: bool,
    pub makespan_consistent: bool,
    pub recomputed_makespan: Option<f64>,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.coverage
            && self.uniqueness
            && self.chaining
            && self.depots
            && self.energy
            && self.makespan_consistent
    }
}

pub fn validate_tour(tour: &DroneTour, inst: &Instance) -> ValidationReport {
    let mut r = ValidationReport {
        coverage: true,
        uniqueness: true,
        chaining: true,
        depots: true,
        energy: true,
        makespan_consistent: true,
        recomputed_makespan: None,
        messages: Vec::new(),
    };

    // Alternation: leg, op, leg, ..., leg.
    let alternating = tour.elements.len() % 2 == 1
        && tour.elements.iter().enumerate().all(|(i, e)| match e {
            TourElement::Leg(_) => i % 2 == 0,
            TourElement::Op(_) => i % 2 == 1,
        });
    if !alternating {
        r.chaining = false;
        r.messages.push("elements do not alternate leg/op/…/leg".into());
    }
    for (i, pair) in tour.elements.windows(2).enumerate() {
        if pair[0].end_rl() != pair[1].start_rl() {
            r.chaining = false;
            r.messages.push(format!(
                "element {} ends at RL {} but element {} starts at RL {}",
                i,
                pair[0].end_rl(),
                i + 1,
                pair[1].start_rl()
            ));
        }
    }
    match (tour.elements.first(), tour.elements.last()) {
        (Some(first), Some(last)) => {
            if first.start_rl() != inst.depot_start() {
                r.depots = false;
                r.messages.push(format!(
                    "tour starts at RL {} instead of depot {}",
                    first.start_rl(),
                    inst.depot_start()
                ));
            }
            if last.end_rl() != inst.depot_target() {
                r.depots = false;
                r.messages.push(format!(
                    "tour ends at RL {} instead of depot {}",
                    last.end_rl(),
                    inst.depot_target()
                ));
            }
        }
        _ => {
            r.depots = false;
            r.chaining = false;
            r.messages.push("empty tour".into());
        }
    }

    let mut seen = vec![0usize; inst.n_d()];
    for op in tour.operations() {
        if op.destinations.is_empty() {
            r.energy = false;
            r.messages.push("operation without destinations".into());
            continue;
        }
        for &v in &op.destinations {
            if v < seen.len() {
                seen[v] += 1;
            } else {
                r.coverage = false;
                r.messages.push(format!("unknown destination {v}"));
            }
        }
        match operation_flight_time(op, inst) {
            Ok(flight) => {
                if !inst.op_feasible(op.start_rl, op.end_rl, flight) {
                    r.energy = false;
                    r.messages.push(format!(
                        "operation {:?} is infeasible (flight time {flight})",
                        op.destinations
                    ));
                }
            }
            Err(e) => {
                r.energy = false;
                r.messages.push(e.to_string());
            }
        }
    }
    let missing: Vec<usize> = (0..inst.n_d()).filter(|&v| seen[v] == 0).collect();
    if !missing.is_empty() {
        r.coverage = false;
        r.messages.push(format!("destinations not visited: {missing:?}"));
    }
    let repeated: Vec<usize> = (0..inst.n_d()).filter(|&v| seen[v] > 1).collect();
    if !repeated.is_empty() {
        r.uniqueness = false;
        r.messages
            .push(format!("destinations visited more than once: {repeated:?}"));
    }

    match tour_makespan(tour, inst) {
        Ok(m) => {
            r.recomputed_makespan = Some(m);
            if (m - tour.makespan).abs() > EPS {
                r.makespan_consistent = false;
                r.messages.push(format!(
                    "cached makespan {} differs from recomputed {m}",
                    tour.makespan
                ));
            }
        }
        Err(e) => {
            r.makespan_consistent = false;
            r.messages.push(e.to_string());
        }
    }
    r
}
