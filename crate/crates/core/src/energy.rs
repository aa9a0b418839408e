//! Quadrotor battery current and the extended operational cost model
//! (takeoff, landing, battery swap, hovering, residual energy), plus the
//! order-preserving greedy planner used by field operators.
//!
//! Units in the extended model: seconds for time, milliamp-seconds (mAs)
//! for energy, milliamperes for currents.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    euclidean, manhattan, operation_flight_time, CostModel, DroneTour, Instance, InstanceParts, Metric,
    Operation, RechargingLeg, TourElement, EPS,
};
use crate::search::{SearchStats, SolveReport};

/// Lumped constants of the constant-speed current equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroneEnergyParams {
    /// Motor/propeller constant, voltage folded in.
    pub k: f64,
    /// Weight force m·g.
    pub weight: f64,
    /// Drag constant ½ρS·C_D.
    pub drag: f64,
    /// Battery capacity (mAs).
    pub xi_max: f64,
    pub residual: f64,
}

impl DroneEnergyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.weight > 0.0 && self.drag > 0.0 && self.xi_max > 0.0) {
            return Err(Error::InvalidArgument(
                "energy parameters k, weight, drag and xi_max must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.residual) {
            return Err(Error::InvalidArgument(
                "residual fraction must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Battery current at airspeed `speed` and glide angle `gamma` (radians).
///
/// Returns the current together with a flag that is set when the radicand
/// was negative and had to be clamped to zero.
pub fn battery_current(params: &DroneEnergyParams, speed: f64, gamma: f64) -> (f64, bool) {
    let w = params.weight;
    let c = params.drag;
    let v2 = speed * speed;
    let radicand = w * w + 2.0 * w * c * gamma.sin() * v2 + c * c * v2 * v2;
    if radicand < 0.0 {
        log::warn!("negative radicand in battery current (V={speed}, gamma={gamma}); clamped to 0");
        return (0.0, true);
    }
    (params.k * radicand.powf(0.75), false)
}

fn default_c_tkof() -> f64 {
    33.0
}
fn default_c_land() -> f64 {
    67.0
}
fn default_c_swap() -> f64 {
    250.0
}
fn default_xi_tkof() -> f64 {
    581_658.0
}
fn default_xi_land() -> f64 {
    15_202.0
}
fn default_r_fl() -> f64 {
    15_806.0
}
fn default_r_hov() -> f64 {
    15_687.0
}
fn default_xi_max() -> f64 {
    21.6e6
}
fn default_residual() -> f64 {
    0.10
}

/// Extra time and energy charges of the extended model. Defaults are the
/// published case-study values; `xi_tkof` is much larger than `xi_land`
/// as published.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedCosts {
    #[serde(default = "default_c_tkof")]
    pub c_tkof: f64,
    #[serde(default = "default_c_land")]
    pub c_land: f64,
    #[serde(default = "default_c_swap")]
    pub c_swap: f64,
    #[serde(default = "default_xi_tkof")]
    pub xi_tkof: f64,
    #[serde(default = "default_xi_land")]
    pub xi_land: f64,
    #[serde(default = "default_r_fl")]
    pub r_fl: f64,
    #[serde(default = "default_r_hov")]
    pub r_hov: f64,
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default = "default_residual")]
    pub residual: f64,
}

impl Default for ExtendedCosts {
    fn default() -> Self {
        ExtendedCosts {
            c_tkof: default_c_tkof(),
            c_land: default_c_land(),
            c_swap: default_c_swap(),
            xi_tkof: default_xi_tkof(),
            xi_land: default_xi_land(),
            r_fl: default_r_fl(),
            r_hov: default_r_hov(),
            xi_max: default_xi_max(),
            residual: default_residual(),
        }
    }
}

/// Hover wait, drone time, makespan and energy of a single operation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedOperationCost {
    pub hover_wait: f64,
    pub drone_time: f64,
    pub makespan: f64,
    pub energy: f64,
    pub feasible: bool,
}

impl ExtendedCosts {
    /// All extras zeroed, unit flight current and capacity `e_max`: prices
    /// operations exactly like the base model.
    pub fn degenerate(e_max: f64) -> Self {
        ExtendedCosts {
            c_tkof: 0.0,
            c_land: 0.0,
            c_swap: 0.0,
            xi_tkof: 0.0,
            xi_land: 0.0,
            r_fl: 1.0,
            r_hov: 0.0,
            xi_max: e_max,
            residual: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_tkof", self.c_tkof),
            ("c_land", self.c_land),
            ("c_swap", self.c_swap),
            ("xi_tkof", self.xi_tkof),
            ("xi_land", self.xi_land),
            ("r_fl", self.r_fl),
            ("r_hov", self.r_hov),
            ("xi_max", self.xi_max),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::schema(
                    name,
                    format!("must be finite and nonnegative, got {v}"),
                ));
            }
        }
        if !(0.0..1.0).contains(&self.residual) {
            return Err(Error::schema("residual", "must lie in [0, 1)"));
        }
        if self.r_hov > self.r_fl {
            // Minimum flight time per (start, set, end) is then no longer
            // guaranteed to be the cheapest energy-wise.
            log::warn!("hover current exceeds flight current; operation pricing may be suboptimal");
        }
        Ok(())
    }

    /// Usable energy per battery.
    pub fn usable_energy(&self) -> f64 {
        (1.0 - self.residual) * self.xi_max
    }

    /// Longest flight time of any feasible operation (zero hover wait).
    pub fn max_flight_time(&self) -> f64 {
        let spare = self.usable_energy() - self.xi_tkof - self.xi_land;
        if self.r_fl == 0.0 {
            if spare >= 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            (spare / self.r_fl).max(0.0)
        }
    }

    pub fn hover_wait(&self, flight: f64, rover: f64) -> f64 {
        (rover - (self.c_tkof + flight)).max(0.0)
    }

    pub fn cost(&self, flight: f64, rover: f64) -> ExtendedOperationCost {
        let hover_wait = self.hover_wait(flight, rover);
        let drone_time = self.c_tkof + flight + hover_wait + self.c_land;
        let makespan = drone_time.max(rover) + self.c_swap;
        let energy = self.xi_tkof + self.r_fl * flight + self.r_hov * hover_wait + self.xi_land;
        ExtendedOperationCost {
            hover_wait,
            drone_time,
            makespan,
            energy,
            feasible: energy <= self.usable_energy() + EPS,
        }
    }

    pub fn makespan(&self, flight: f64, rover: f64) -> f64 {
        self.cost(flight, rover).makespan
    }

    pub fn feasible(&self, flight: f64, rover: f64) -> bool {
        self.cost(flight, rover).feasible
    }

    /// Feasibility ignoring hover energy (what a planner that does not model
    /// waiting would check).
    pub fn planned_feasible(&self, flight: f64) -> bool {
        self.xi_tkof + self.r_fl * flight + self.xi_land <= self.usable_energy() + EPS
    }
}

/// Extended-model makespan and energy of `op`.
pub fn extended_operation_cost(
    op: &Operation,
    inst: &Instance,
    costs: &ExtendedCosts,
) -> Result<ExtendedOperationCost> {
    let flight = operation_flight_time(op, inst)?;
    Ok(costs.cost(flight, inst.drive(op.start_rl, op.end_rl)))
}

/// Prices `inst` under `costs`: operations get the extended charges and the
/// flight limit becomes the longest feasible flight.
pub fn extended_instance(inst: &Instance, costs: ExtendedCosts) -> Result<Instance> {
    costs.validate()?;
    let budget = costs.max_flight_time();
    let base = if budget.is_finite() {
        inst.with_e_max(budget)?
    } else {
        inst.clone()
    };
    Ok(base.with_model(CostModel::Extended(costs)))
}

/// Per-tour check under the extended model.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedTourReport {
    pub structure_ok: bool,
    /// Every operation's energy, hover wait included, fits the usable budget.
    pub energy_ok: bool,
    /// Every operation's energy without hover wait fits the usable budget.
    pub planned_energy_ok: bool,
    /// Operations whose hover wait would breach the budget (the drone has
    /// to land and wait on the ground).
    pub forced_landings: usize,
    pub makespan: f64,
    pub max_hover_wait: f64,
}

pub fn check_extended_tour(tour: &DroneTour, inst: &Instance, costs: &ExtendedCosts) -> ExtendedTourReport {
    let priced = inst.clone().with_model(CostModel::Extended(*costs));
    let base = crate::model::validate_tour(tour, &priced);
    let structure_ok =
        base.coverage && base.uniqueness && base.chaining && base.depots && base.makespan_consistent;
    let mut energy_ok = true;
    let mut planned_energy_ok = true;
    let mut forced_landings = 0;
    let mut max_hover_wait: f64 = 0.0;
    for op in tour.operations() {
        let flight = match operation_flight_time(op, inst) {
            Ok(f) => f,
            Err(_) => {
                energy_ok = false;
                planned_energy_ok = false;
                continue;
            }
        };
        let c = costs.cost(flight, inst.drive(op.start_rl, op.end_rl));
        max_hover_wait = max_hover_wait.max(c.hover_wait);
        let planned = costs.planned_feasible(flight);
        if !planned {
            planned_energy_ok = false;
        }
        if !c.feasible {
            energy_ok = false;
            if planned {
                forced_landings += 1;
            }
        }
    }
    ExtendedTourReport {
        structure_ok,
        energy_ok,
        planned_energy_ok,
        forced_landings,
        makespan: base.recomputed_makespan.unwrap_or(f64::NAN),
        max_hover_wait,
    }
}

/// Greedy planner that keeps the destination order `x` and inserts a battery
/// swap at the RL closest to the current destination whenever the next
/// destination could not be reached with a safe return.
///
/// `inst` supplies the metrics; the tour is priced under `costs`. Hover
/// energy is not planned for, so the returned tour may need forced landings
/// (see [`check_extended_tour`]).
pub fn pract(inst: &Instance, costs: &ExtendedCosts, x: &[usize]) -> Result<SolveReport> {
    let started = Instant::now();
    costs.validate()?;
    if x.len() != inst.n_d() {
        return Err(Error::InvalidArgument(format!(
            "order has {} destinations, instance has {}",
            x.len(),
            inst.n_d()
        )));
    }
    let reserve = costs.residual * costs.xi_max;
    let mut ops: Vec<Operation> = Vec::new();
    let mut at_rl = inst.depot_start();
    let mut current: Vec<usize> = Vec::new();
    let mut energy = costs.xi_max;

    let mut i = 0;
    while i < x.len() {
        let next = x[i];
        let bill = match current.last() {
            None => costs.xi_tkof + costs.r_fl * inst.fly_rd(at_rl, next),
            Some(&v) => costs.r_fl * inst.fly_dd(v, next),
        };
        // Remaining flight time after reaching `next`, landing energy held back.
        let spare = energy - reserve - bill - costs.xi_land;
        let range = if costs.r_fl > 0.0 {
            spare / costs.r_fl
        } else if spare >= 0.0 {
            f64::INFINITY
        } else {
            -1.0
        };
        let (_, back) = inst.nearest_rl(next);
        if spare >= -EPS && back <= range + EPS {
            current.push(next);
            energy -= bill;
            i += 1;
        } else if current.is_empty() {
            // Relocate the rover to the RL closest to `next` before launching.
            let (near, _) = inst.nearest_rl(next);
            if near == at_rl {
                return Err(Error::Infeasible(format!(
                    "destination {next} cannot be reached from RL {at_rl} on a full battery"
                )));
            }
            at_rl = near;
        } else {
            let last = *current.last().unwrap();
            let (swap_rl, _) = inst.nearest_rl(last);
            ops.push(Operation::new(at_rl, std::mem::take(&mut current), swap_rl));
            at_rl = swap_rl;
            energy = costs.xi_max;
        }
    }
    if let Some(&last) = current.last() {
        let (end_rl, _) = inst.nearest_rl(last);
        ops.push(Operation::new(at_rl, std::mem::take(&mut current), end_rl));
    }

    let priced = inst.clone().with_model(CostModel::Extended(*costs));
    let mut elements = Vec::with_capacity(2 * ops.len() + 1);
    let mut at = inst.depot_start();
    for op in ops {
        elements.push(TourElement::Leg(RechargingLeg::new(at, op.start_rl)));
        at = op.end_rl;
        elements.push(TourElement::Op(op));
    }
    elements.push(TourElement::Leg(RechargingLeg::new(at, inst.depot_target())));
    let tour = DroneTour::from_elements(elements, &priced)?;
    Ok(SolveReport {
        algorithm: "pract".into(),
        makespan: tour.makespan,
        history: vec![tour.makespan],
        tour,
        stats: SearchStats {
            iterations: 1,
            ..SearchStats::default()
        },
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Layout of a synthetic search-and-rescue style instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseStudyConfig {
    pub n_d: usize,
    /// RLs on a `rl_rows × rl_cols` grid along the area.
    pub rl_rows: usize,
    pub rl_cols: usize,
    /// Square side in meters.
    pub side_m: f64,
    pub drone_speed: f64,
    pub rover_speed: f64,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        CaseStudyConfig {
            n_d: 40,
            rl_rows: 8,
            rl_cols: 8,
            side_m: 2650.0,
            drone_speed: 3.0,
            rover_speed: 1.0,
        }
    }
}

/// Random instance in seconds: Euclidean drone flights at `drone_speed`,
/// Manhattan rover trips at `rover_speed`, depot at a corner RL and target at
/// the opposite corner. The base flight limit is the extended model's
/// longest feasible flight.
pub fn case_study_instance(cfg: &CaseStudyConfig, costs: &ExtendedCosts, seed: u64) -> Result<Instance> {
    if cfg.rl_rows < 2 || cfg.rl_cols < 2 {
        return Err(Error::InvalidArgument("RL grid needs at least 2×2 points".into()));
    }
    let budget = costs.max_flight_time();
    let mut rls = Vec::with_capacity(cfg.rl_rows * cfg.rl_cols);
    for r in 0..cfg.rl_rows {
        for c in 0..cfg.rl_cols {
            rls.push([
                cfg.side_m * c as f64 / (cfg.rl_cols - 1) as f64,
                cfg.side_m * r as f64 / (cfg.rl_rows - 1) as f64,
            ]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..100 {
        let dests: Vec<[f64; 2]> = (0..cfg.n_d)
            .map(|_| {
                [
                    rng.random_range(0.0..=cfg.side_m),
                    rng.random_range(0.0..=cfg.side_m),
                ]
            })
            .collect();
        let reachable = dests.iter().all(|&d| {
            let near = rls.iter().map(|&w| euclidean(d, w)).fold(f64::INFINITY, f64::min);
            2.0 * near / cfg.drone_speed <= budget
        });
        if !reachable {
            continue;
        }
        let nodes: Vec<[f64; 2]> = dests.iter().chain(rls.iter()).copied().collect();
        let n = nodes.len();
        let mut drone = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                drone[a * n + b] = euclidean(nodes[a], nodes[b]) / cfg.drone_speed;
            }
        }
        let n_r = rls.len();
        let mut rover = vec![0.0; n_r * n_r];
        for a in 0..n_r {
            for b in 0..n_r {
                rover[a * n_r + b] = manhattan(rls[a], rls[b]) / cfg.rover_speed;
            }
        }
        return Instance::new(InstanceParts {
            name: format!("casestudy_{seed}"),
            n_d: cfg.n_d,
            n_r,
            depot_start: 0,
            depot_target: n_r - 1,
            e_max: budget,
            destinations: dests,
            rls,
            rover_speed: cfg.rover_speed,
            drone_metric: Metric::Euclidean,
            rover_metric: Metric::Manhattan,
            drone,
            rover,
        });
    }
    Err(Error::Infeasible(
        "could not place reachable destinations in 100 attempts".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DroneEnergyParams {
        DroneEnergyParams {
            k: 0.8,
            weight: 30.0,
            drag: 0.12,
            xi_max: 21.6e6,
            residual: 0.1,
        }
    }

    #[test]
    fn level_flight_closed_form() {
        let p = params();
        let v: f64 = 7.0;
        let want = p.k * (p.weight.powi(2) + p.drag.powi(2) * v.powi(4)).powf(0.75);
        let (got, clamped) = battery_current(&p, v, 0.0);
        assert!(!clamped);
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn hover_closed_form() {
        let p = params();
        let (got, _) = battery_current(&p, 0.0, 0.3);
        let want = p.k * p.weight.powf(1.5);
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn climb_draws_more_than_level() {
        let p = params();
        let level = battery_current(&p, 5.0, 0.0).0;
        let climb = battery_current(&p, 5.0, std::f64::consts::FRAC_PI_2).0;
        assert!(climb > level);
    }

    #[test]
    fn vertical_descent_at_balance_speed_draws_nothing() {
        // (W - C V²)² vanishes at C V² = W.
        let p = DroneEnergyParams {
            weight: 4.0,
            drag: 0.5,
            ..params()
        };
        let (c, clamped) = battery_current(&p, 8f64.sqrt(), -std::f64::consts::FRAC_PI_2);
        assert!(c.abs() < 1e-9);
        assert!(!clamped);
    }

    #[test]
    fn published_flight_energy() {
        let c = ExtendedCosts::default();
        assert!((c.r_fl * 600.0 - 9.4836e6).abs() < 1e-6);
        assert!((c.usable_energy() - 19.44e6).abs() < 1e-6);
    }

    #[test]
    fn no_hover_when_rover_is_quicker() {
        let c = ExtendedCosts::default();
        let r = c.cost(500.0, 300.0);
        assert_eq!(r.hover_wait, 0.0);
        assert_eq!(r.drone_time, 33.0 + 500.0 + 67.0);
        assert_eq!(r.makespan, 600.0 + 250.0);
    }

    #[test]
    fn hover_when_rover_is_slow() {
        let c = ExtendedCosts::default();
        let r = c.cost(500.0, 1000.0);
        assert_eq!(r.hover_wait, 1000.0 - 533.0);
        assert_eq!(r.makespan, 1000.0 + 67.0 + 250.0);
        assert_eq!(
            r.energy,
            581_658.0 + 15_806.0 * 500.0 + 15_687.0 * 467.0 + 15_202.0
        );
    }

    #[test]
    fn degenerate_costs_match_base_pricing() {
        let c = ExtendedCosts::degenerate(100.0);
        for (f, r) in [(10.0, 3.0), (3.0, 10.0), (100.0, 0.0)] {
            assert_eq!(c.makespan(f, r), f64::max(f, r));
            assert!(c.feasible(f, r));
        }
        assert!(!c.feasible(100.5, 0.0));
        assert_eq!(c.max_flight_time(), 100.0);
    }

    #[test]
    fn makespan_nondecreasing_in_flight() {
        let c = ExtendedCosts::default();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let m = c.makespan(i as f64 * 10.0, 900.0);
            assert!(m >= prev);
            prev = m;
        }
    }
}
