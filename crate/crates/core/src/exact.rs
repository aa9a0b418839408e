//! Exact solver over all destination subsets, shared with LIMOP.
//!
//! Stage one runs a Held-Karp recursion from every RL to get the minimum
//! flight time of every (start RL, subset, end RL) operation. Stage two
//! combines operations and legs over subsets: `Z[S][w]` is the best makespan
//! after covering `S` and driving to `w`.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DroneTour, Instance, Operation, EPS};
use crate::oracle::split_optimal;
use crate::search::{SearchStats, SolveReport};

#[derive(Clone, Debug, PartialEq)]
pub struct ExactConfig {
    pub max_destinations: usize,
    /// Upper limit on `n_r * 2^n_d`, the number of meta values held at once.
    pub max_state_values: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            max_destinations: 18,
            max_state_values: 1 << 26,
        }
    }
}

const NONE: u32 = u32::MAX;

/// Makespans of every feasible subset operation, indexed by subset.
struct SubsetOps {
    n_r: usize,
    /// `slot[T]` is the block of `n_r * n_r` makespans for subset `T`, or NONE.
    slot: Vec<u32>,
    makespan: Vec<f64>,
    ops_states: usize,
    ops_arcs: usize,
}

impl SubsetOps {
    #[inline]
    fn row(&self, t: usize, w: usize) -> Option<&[f64]> {
        let s = self.slot[t];
        if s == NONE {
            return None;
        }
        let base = (s as usize * self.n_r + w) * self.n_r;
        Some(&self.makespan[base..base + self.n_r])
    }
}

/// Held-Karp from RL `w` over subsets of at most `cap` destinations, with the
/// reachability pruning applied to every partial operation.
fn held_karp_from(inst: &Instance, w: usize, cap: usize) -> (Vec<(u32, Vec<f64>)>, usize, usize) {
    let n = inst.n_d();
    let n_r = inst.n_r();
    let budget = inst.flight_budget() + EPS;
    let inf = f64::INFINITY;
    let full = 1usize << n;
    let mut hk = vec![inf; full * n];
    let mut states = 0usize;
    let mut arcs = 0usize;
    for v in 0..n {
        let f = inst.fly_rd(w, v);
        if f + inst.nearest_rl(v).1 <= budget {
            hk[(1 << v) * n + v] = f;
        }
    }
    let mut out = Vec::new();
    let mut close = vec![inf; n_r];
    for s in 1..full {
        let size = s.count_ones() as usize;
        if size > cap {
            continue;
        }
        close.iter_mut().for_each(|c| *c = inf);
        let mut any = false;
        for v in 0..n {
            let z = hk[s * n + v];
            if !z.is_finite() {
                continue;
            }
            states += 1;
            for (w2, c) in close.iter_mut().enumerate() {
                let f = z + inst.fly_dr(v, w2);
                if f < *c {
                    *c = f;
                }
            }
            any = true;
            if size == cap {
                continue;
            }
            let mut rest = (full - 1) & !s;
            while rest != 0 {
                let u = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let cand = z + inst.fly_dd(v, u);
                if cand + inst.nearest_rl(u).1 > budget {
                    continue;
                }
                arcs += 1;
                let cell = (s | (1 << u)) * n + u;
                if cand < hk[cell] {
                    hk[cell] = cand;
                }
            }
        }
        if !any {
            continue;
        }
        let mut row = vec![inf; n_r];
        let mut feasible = false;
        for (w2, &f) in close.iter().enumerate() {
            if f.is_finite() && inst.op_feasible(w, w2, f) {
                row[w2] = inst.op_makespan(w, w2, f);
                feasible = true;
            }
        }
        if feasible {
            out.push((s as u32, row));
        }
    }
    (out, states, arcs)
}

fn subset_ops(inst: &Instance, cap: usize) -> SubsetOps {
    let n_r = inst.n_r();
    let per_rl: Vec<_> = (0..n_r)
        .into_par_iter()
        .map(|w| held_karp_from(inst, w, cap))
        .collect();
    let mut slot = vec![NONE; 1usize << inst.n_d()];
    let mut makespan: Vec<f64> = Vec::new();
    let mut ops_states = 0;
    let mut ops_arcs = 0;
    for (w, (rows, states, arcs)) in per_rl.into_iter().enumerate() {
        ops_states += states;
        ops_arcs += arcs;
        for (t, row) in rows {
            let t = t as usize;
            if slot[t] == NONE {
                slot[t] = (makespan.len() / (n_r * n_r)) as u32;
                makespan.extend(std::iter::repeat_n(f64::INFINITY, n_r * n_r));
            }
            let base = (slot[t] as usize * n_r + w) * n_r;
            makespan[base..base + n_r].copy_from_slice(&row);
        }
    }
    SubsetOps {
        n_r,
        slot,
        makespan,
        ops_states,
        ops_arcs,
    }
}

/// Cheapest visiting order of `set` flown from `w` to `w2`.
fn best_order(inst: &Instance, w: usize, set: u32, w2: usize) -> Vec<usize> {
    let items: Vec<usize> = (0..inst.n_d()).filter(|&v| set & (1 << v) != 0).collect();
    let k = items.len();
    let inf = f64::INFINITY;
    let mut dp = vec![inf; (1 << k) * k];
    let mut from = vec![usize::MAX; (1 << k) * k];
    for (i, &v) in items.iter().enumerate() {
        dp[(1 << i) * k + i] = inst.fly_rd(w, v);
    }
    for s in 1..(1usize << k) {
        for i in 0..k {
            let z = dp[s * k + i];
            if !z.is_finite() {
                continue;
            }
            for j in 0..k {
                if s & (1 << j) != 0 {
                    continue;
                }
                let cell = (s | (1 << j)) * k + j;
                let cand = z + inst.fly_dd(items[i], items[j]);
                if cand < dp[cell] {
                    dp[cell] = cand;
                    from[cell] = i;
                }
            }
        }
    }
    let all = (1usize << k) - 1;
    let mut last = 0;
    let mut best = inf;
    for i in 0..k {
        let f = dp[all * k + i] + inst.fly_dr(items[i], w2);
        if f < best {
            best = f;
            last = i;
        }
    }
    let mut order = Vec::with_capacity(k);
    let mut s = all;
    let mut i = last;
    loop {
        order.push(items[i]);
        let prev = from[s * k + i];
        s &= !(1 << i);
        if prev == usize::MAX {
            break;
        }
        i = prev;
    }
    order.reverse();
    order
}

/// Optimal tour among those whose operations hold at most `cap` destinations.
pub(crate) fn subset_dp(
    inst: &Instance,
    cap: usize,
    cfg: &ExactConfig,
    algorithm: &str,
) -> Result<SolveReport> {
    let started = Instant::now();
    let n = inst.n_d();
    let n_r = inst.n_r();
    if n > cfg.max_destinations || n >= 32 {
        return Err(Error::SizeGuard(format!(
            "{algorithm} handles at most {} destinations (instance has {n}); use vlsn-ls or vlsn-vnd instead",
            cfg.max_destinations.min(31)
        )));
    }
    if n_r.saturating_mul(1usize << n) > cfg.max_state_values || n_r > u16::MAX as usize {
        return Err(Error::SizeGuard(format!(
            "{algorithm} would hold {n_r} x 2^{n} states, above the budget of {}",
            cfg.max_state_values
        )));
    }
    if n == 0 {
        let tour = split_optimal(&[], inst)?;
        let report = SolveReport::from_tour(algorithm, tour, SearchStats::default(), started);
        return Ok(report);
    }
    let cap = cap.clamp(1, n);
    let ops = subset_ops(inst, cap);

    let full = 1usize << n;
    let inf = f64::INFINITY;
    let mut z = vec![inf; full * n_r];
    let mut z_from = vec![u16::MAX; full * n_r];
    let mut e_from = vec![(NONE, u16::MAX); full * n_r];
    for w in 0..n_r {
        z[w] = inst.drive(inst.depot_start(), w);
    }
    let mut eps = vec![inf; n_r];
    let mut meta_states = 0usize;
    let mut arcs = 0usize;
    for s in 1..full {
        eps.iter_mut().for_each(|e| *e = inf);
        let cell = s * n_r;
        let mut t = s;
        while t != 0 {
            if ops.slot[t] != NONE {
                let r = s ^ t;
                for w in 0..n_r {
                    let base = z[r * n_r + w];
                    if !base.is_finite() {
                        continue;
                    }
                    let row = ops.row(t, w).expect("slot checked");
                    for (w2, &m) in row.iter().enumerate() {
                        let val = base + m;
                        if val < eps[w2] {
                            eps[w2] = val;
                            e_from[cell + w2] = (t as u32, w as u16);
                        }
                    }
                    arcs += 1;
                }
            }
            t = (t - 1) & s;
        }
        for (w2, &e) in eps.iter().enumerate() {
            if !e.is_finite() {
                continue;
            }
            meta_states += 1;
            for w3 in 0..n_r {
                let val = e + inst.drive(w2, w3);
                if val < z[cell + w3] {
                    z[cell + w3] = val;
                    z_from[cell + w3] = w2 as u16;
                }
            }
        }
    }
    let value = z[(full - 1) * n_r + inst.depot_target()];
    if !value.is_finite() {
        return Err(Error::Infeasible(format!("{algorithm}: no feasible tour")));
    }

    let mut rev = Vec::new();
    let mut s = full - 1;
    let mut w3 = inst.depot_target();
    while s != 0 {
        let w2 = z_from[s * n_r + w3] as usize;
        let (t, w) = e_from[s * n_r + w2];
        rev.push(Operation::new(
            w as usize,
            best_order(inst, w as usize, t, w2),
            w2,
        ));
        s ^= t as usize;
        w3 = w as usize;
    }
    rev.reverse();
    let tour = DroneTour::from_operations(rev, inst)?;
    debug_assert!((tour.makespan - value).abs() <= 1e-6 * value.max(1.0));
    let stats = SearchStats {
        iterations: 1,
        neighborhoods: 1,
        ops_states: ops.ops_states,
        meta_states,
        arcs: ops.ops_arcs + arcs,
    };
    Ok(SolveReport::from_tour(algorithm, tour, stats, started))
}

/// Provably optimal tour.
pub fn solve_exact(inst: &Instance) -> Result<SolveReport> {
    solve_exact_with(inst, &ExactConfig::default())
}

pub fn solve_exact_with(inst: &Instance, cfg: &ExactConfig) -> Result<SolveReport> {
    subset_dp(inst, inst.n_d(), cfg, "exact")
}
