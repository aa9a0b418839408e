//! Neighborhood search drivers: a single VLSN step, local search around the
//! incumbent (VLSN-LS), variable neighborhood descent over `p` (VLSN-VND),
//! and the route-first split baseline (RTS).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use crate::baselines::initial_tsp_sequence;
use crate::error::{Error, Result};
use crate::meta_graph::{solve_meta, TransitionLookup, MAX_META_P};
use crate::model::{DroneTour, Instance, EPS};
use crate::ops_graph::build_ops_graph;
use crate::oracle::split_optimal;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Neighborhood parameter for single-neighborhood and LS runs.
    pub p: usize,
    pub p0: usize,
    pub p_max: usize,
    /// Wall-clock budget in seconds.
    pub time_limit: Option<f64>,
    pub seed: u64,
    /// Also try moving boundary destinations across the order when start and
    /// target depot coincide.
    pub single_depot_extension: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            p: 4,
            p0: 2,
            p_max: 8,
            time_limit: None,
            seed: 0,
            single_depot_extension: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p0 == 0 || self.p0 > self.p_max {
            return Err(Error::InvalidArgument(format!(
                "need p >= 1 and 1 <= p0 <= p_max (got p={}, p0={}, p_max={})",
                self.p, self.p0, self.p_max
            )));
        }
        if self.p > MAX_META_P || self.p_max > MAX_META_P {
            return Err(Error::SizeGuard(format!("p is limited to {MAX_META_P}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub iterations: usize,
    pub neighborhoods: usize,
    pub ops_states: usize,
    pub meta_states: usize,
    pub arcs: usize,
}

impl SearchStats {
    fn absorb(&mut self, other: &SearchStats) {
        self.neighborhoods += other.neighborhoods;
        self.ops_states += other.ops_states;
        self.meta_states += other.meta_states;
        self.arcs += other.arcs;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub algorithm: String,
    pub tour: DroneTour,
    pub makespan: f64,
    pub stats: SearchStats,
    /// Incumbent value after each iteration.
    pub history: Vec<f64>,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub(crate) fn from_tour(algorithm: &str, tour: DroneTour, stats: SearchStats, started: Instant) -> Self {
        SolveReport {
            algorithm: algorithm.to_string(),
            makespan: tour.makespan,
            history: vec![tour.makespan],
            tour,
            stats,
            wall_time_s: started.elapsed().as_secs_f64(),
        }
    }
}

/// Shared transition table for `p`.
pub fn transition_lookup(p: usize) -> Result<&'static TransitionLookup> {
    static CACHE: [OnceLock<TransitionLookup>; MAX_META_P + 1] = [const { OnceLock::new() }; MAX_META_P + 1];
    if p == 0 || p > MAX_META_P {
        return Err(Error::SizeGuard(format!(
            "p must lie in 1..={MAX_META_P}, got {p}"
        )));
    }
    Ok(CACHE[p].get_or_init(|| TransitionLookup::new(p).expect("p checked above")))
}

/// Orders obtained by moving one of the first `p - 1` destinations into one
/// of the last `p - 1` positions, or one of the last into the first,
/// without duplicates and without `x` itself.
pub fn shifted_permutations(x: &[usize], p: usize) -> Vec<Vec<usize>> {
    let n = x.len();
    let span = p.saturating_sub(1).min(n);
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut push = |from: usize, to: usize| {
        let mut y = x.to_vec();
        let v = y.remove(from);
        y.insert(to, v);
        if y != x && !out.contains(&y) {
            out.push(y);
        }
    };
    for from in 0..span {
        for to in n - span..n {
            push(from, to);
        }
    }
    for from in n - span..n {
        for to in 0..span {
            push(from, to);
        }
    }
    out
}

fn neighborhood(inst: &Instance, x: &[usize], p: usize, stats: &mut SearchStats) -> Result<DroneTour> {
    let p = p.clamp(1, x.len().max(1));
    let table = build_ops_graph(inst, x, p)?;
    let sol = solve_meta(&table, transition_lookup(p)?, inst)?;
    stats.neighborhoods += 1;
    stats.ops_states += table.stats.non_terminal();
    stats.meta_states += sol.stats.states_per_stage.iter().sum::<usize>();
    stats.arcs += table.stats.arcs + sol.stats.arcs;
    Ok(sol.tour)
}

fn vlsn_step(inst: &Instance, x: &[usize], p: usize, extension: bool) -> Result<(DroneTour, SearchStats)> {
    let mut stats = SearchStats::default();
    if inst.n_d() == 0 {
        return Ok((split_optimal(x, inst)?, stats));
    }
    let mut best = neighborhood(inst, x, p, &mut stats)?;
    if extension && inst.depot_start() == inst.depot_target() {
        for y in shifted_permutations(x, p.min(x.len())) {
            let t = split_optimal(&y, inst)?;
            stats.neighborhoods += 1;
            if t.makespan < best.makespan {
                best = t;
            }
        }
    }
    Ok((best, stats))
}

/// Best tour in the neighborhood of `x` for parameter `p` (clamped to `n_d`).
pub fn vlsn(inst: &Instance, x: &[usize], p: usize) -> Result<SolveReport> {
    let started = Instant::now();
    let (tour, mut stats) = vlsn_step(inst, x, p, false)?;
    stats.iterations = 1;
    Ok(SolveReport::from_tour("vlsn", tour, stats, started))
}

/// [`vlsn`] honouring `cfg.p` and the single-depot extension.
pub fn vlsn_with_config(inst: &Instance, x: &[usize], cfg: &SearchConfig) -> Result<SolveReport> {
    let started = Instant::now();
    cfg.validate()?;
    let (tour, mut stats) = vlsn_step(inst, x, cfg.p, cfg.single_depot_extension)?;
    stats.iterations = 1;
    Ok(SolveReport::from_tour("vlsn", tour, stats, started))
}

fn deadline(cfg: &SearchConfig, started: Instant) -> Option<Instant> {
    cfg.time_limit
        .map(|s| started + Duration::from_secs_f64(s.max(0.0)))
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Re-centers the neighborhood on the incumbent until no step improves by
/// more than `1e-9`.
pub fn vlsn_ls(inst: &Instance, x0: &[usize], cfg: &SearchConfig) -> Result<SolveReport> {
    let started = Instant::now();
    cfg.validate()?;
    let limit = deadline(cfg, started);
    let mut stats = SearchStats::default();
    let (mut best, s) = vlsn_step(inst, x0, cfg.p, cfg.single_depot_extension)?;
    stats.absorb(&s);
    stats.iterations = 1;
    let mut history = vec![best.makespan];
    while !expired(limit) {
        let center = best.destination_order();
        let (t, s) = vlsn_step(inst, &center, cfg.p, cfg.single_depot_extension)?;
        stats.absorb(&s);
        stats.iterations += 1;
        if t.makespan < best.makespan - EPS {
            best = t;
            history.push(best.makespan);
        } else {
            break;
        }
    }
    let mut report = SolveReport::from_tour("vlsn-ls", best, stats, started);
    report.history = history;
    Ok(report)
}

/// Variable neighborhood descent: `p` starts at `p0`, grows by one after an
/// unsuccessful step and falls back to `p0` after an improvement.
pub fn vlsn_vnd(inst: &Instance, x0: &[usize], cfg: &SearchConfig) -> Result<SolveReport> {
    let started = Instant::now();
    cfg.validate()?;
    let limit = deadline(cfg, started);
    let mut stats = SearchStats::default();
    let mut best = split_optimal(x0, inst)?;
    let n = inst.n_d().max(1);
    let mut p = cfg.p0;
    let mut history = vec![best.makespan];
    while p <= cfg.p_max && !expired(limit) {
        let center = best.destination_order();
        let (t, s) = vlsn_step(inst, &center, p, cfg.single_depot_extension)?;
        stats.absorb(&s);
        stats.iterations += 1;
        if t.makespan < best.makespan - EPS {
            best = t;
            history.push(best.makespan);
            p = cfg.p0;
        } else {
            if p >= n {
                // Larger p describes the same neighborhood.
                break;
            }
            p += 1;
        }
    }
    let mut report = SolveReport::from_tour("vlsn-vnd", best, stats, started);
    report.history = history;
    Ok(report)
}

/// Optimal split of the initial TSP order.
pub fn rts(inst: &Instance) -> Result<SolveReport> {
    let started = Instant::now();
    let x = initial_tsp_sequence(inst);
    let tour = split_optimal(&x, inst)?;
    let stats = SearchStats {
        iterations: 1,
        neighborhoods: 1,
        ..Default::default()
    };
    Ok(SolveReport::from_tour("rts", tour, stats, started))
}
