//! Brute-force reference implementations.
//!
//! Besides the exhaustive oracles, this module owns [`split_optimal`], the
//! optimal replenishment insertion for a fixed destination order. The
//! production heuristics reuse it as their inner step.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::model::{DroneTour, Instance, Operation, RechargingLeg, TourElement};

pub const MAX_ENUMERATION: usize = 10;
pub const MAX_BRUTE_DESTINATIONS: usize = 7;
pub const MAX_BRUTE_RLS: usize = 5;

/// A destination order together with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl Permutation {
    /// `order[t]` is the destination visited at position `t`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (t, &v) in order.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "{order:?} is not a permutation of 0..{n}"
                )));
            }
            position[v] = t;
        }
        Ok(Permutation { order, position })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            order: (0..n).collect(),
            position: (0..n).collect(),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position_of(&self, v: usize) -> usize {
        self.position[v]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Checks the neighborhood condition pair by pair: every destination at
/// least `p` places after another one in `x` must stay after it in `x_prime`.
pub fn is_bs_neighbor(x: &[usize], x_prime: &[usize], p: usize) -> Result<bool> {
    if x.len() != x_prime.len() {
        return Err(Error::InvalidArgument(format!(
            "sequence lengths differ: {} vs {}",
            x.len(),
            x_prime.len()
        )));
    }
    let n = x.len();
    let universe = x.iter().copied().max().map_or(0, |m| m + 1);
    let mut pos = vec![usize::MAX; universe.max(x_prime.iter().copied().max().map_or(0, |m| m + 1))];
    for (t, &v) in x_prime.iter().enumerate() {
        pos[v] = t;
    }
    for &v in x {
        if pos[v] == usize::MAX {
            return Err(Error::InvalidArgument(format!(
                "destination {v} missing from the second sequence"
            )));
        }
    }
    for i in 0..n {
        for j in (i + p.max(1))..n {
            if pos[x[j]] <= pos[x[i]] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// All neighbors of `x` in lexicographic order of the position sequence.
pub fn enumerate_bs_neighbors(x: &[usize], p: usize) -> Result<Vec<Vec<usize>>> {
    let n = x.len();
    if n > MAX_ENUMERATION {
        return Err(Error::SizeGuard(format!(
            "neighbor enumeration is limited to {MAX_ENUMERATION} destinations (got {n})"
        )));
    }
    let p = p.max(1);
    let mut out = Vec::new();
    let mut used = vec![false; n];
    let mut seq = Vec::with_capacity(n);
    fn rec(x: &[usize], p: usize, used: &mut [bool], seq: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let n = x.len();
        if seq.len() == n {
            out.push(seq.iter().map(|&i| x[i]).collect());
            return;
        }
        let m = (0..n).find(|&i| !used[i]).unwrap();
        for j in m..n.min(m + p) {
            if !used[j] {
                used[j] = true;
                seq.push(j);
                rec(x, p, used, seq, out);
                seq.pop();
                used[j] = false;
            }
        }
    }
    rec(x, p, &mut used, &mut seq, &mut out);
    Ok(out)
}

/// Size of the neighborhood for `n` destinations, without enumerating it.
pub fn count_bs_neighbors(n: usize, p: usize) -> u128 {
    let p = p.max(1);
    if n == 0 {
        return 1;
    }
    assert!(p <= 64, "window too wide");
    // State: smallest unplaced index m and the placed indices in (m, m + p).
    fn rec(n: usize, p: usize, m: usize, mask: u64, memo: &mut FxHashMap<(usize, u64), u128>) -> u128 {
        if m >= n {
            return 1;
        }
        if let Some(&c) = memo.get(&(m, mask)) {
            return c;
        }
        let mut total = 0;
        // place m itself
        {
            let mut nm = m + 1;
            let mut nmask = mask;
            while nmask & 1 == 1 {
                nmask >>= 1;
                nm += 1;
            }
            nmask >>= 1;
            total += rec(n, p, nm, nmask, memo);
        }
        for d in 1..p {
            let j = m + d;
            if j >= n {
                break;
            }
            let bit = 1u64 << (d - 1);
            if mask & bit == 0 {
                total += rec(n, p, m, mask | bit, memo);
            }
        }
        memo.insert((m, mask), total);
        total
    }
    let mut memo = FxHashMap::default();
    rec(n, p, 0, 0, &mut memo)
}

/// Lower bound `((p - 1) / e)^(n - 1)` on the neighborhood size.
pub fn neighborhood_lower_bound(n: usize, p: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    ((p as f64 - 1.0) / std::f64::consts::E).powi(n as i32 - 1)
}

/// Optimal split of a fixed destination order: minimum makespan over every
/// partition of `x` into consecutive operations and every RL choice.
pub fn split_optimal(x: &[usize], inst: &Instance) -> Result<DroneTour> {
    let n = x.len();
    if n != inst.n_d() {
        return Err(Error::InvalidArgument(format!(
            "order has {n} destinations, instance has {}",
            inst.n_d()
        )));
    }
    Permutation::from_order(x.to_vec())?;
    let n_r = inst.n_r();
    let budget = inst.flight_budget();
    let inf = f64::INFINITY;

    // zeta[i][w]: after i destinations, standing at w, closing leg included.
    let mut zeta = vec![inf; (n + 1) * n_r];
    let mut zeta_from = vec![usize::MAX; (n + 1) * n_r];
    // eps[j][w']: op ending at w' after j destinations, before the leg.
    let mut eps = vec![inf; (n + 1) * n_r];
    let mut eps_from = vec![(usize::MAX, usize::MAX); (n + 1) * n_r];
    for w in 0..n_r {
        zeta[w] = inst.drive(inst.depot_start(), w);
        zeta_from[w] = inst.depot_start();
    }
    for i in 0..n {
        for w in 0..n_r {
            let base = zeta[i * n_r + w];
            if !base.is_finite() {
                continue;
            }
            let mut partial = inst.fly_rd(w, x[i]);
            for j in (i + 1)..=n {
                let last = x[j - 1];
                if j > i + 1 {
                    partial += inst.fly_dd(x[j - 2], last);
                }
                if partial + inst.nearest_rl(last).1 > budget + crate::model::EPS {
                    break;
                }
                for w2 in 0..n_r {
                    let flight = partial + inst.fly_dr(last, w2);
                    if !inst.op_feasible(w, w2, flight) {
                        continue;
                    }
                    let val = base + inst.op_makespan(w, w2, flight);
                    let cell = j * n_r + w2;
                    if val < eps[cell] {
                        eps[cell] = val;
                        eps_from[cell] = (i, w);
                    }
                }
            }
        }
        let j = i + 1;
        for w2 in 0..n_r {
            let e = eps[j * n_r + w2];
            if !e.is_finite() {
                continue;
            }
            for w3 in 0..n_r {
                let val = e + inst.drive(w2, w3);
                let cell = j * n_r + w3;
                if val < zeta[cell] {
                    zeta[cell] = val;
                    zeta_from[cell] = w2;
                }
            }
        }
    }
    let target = n * n_r + inst.depot_target();
    if !zeta[target].is_finite() {
        return Err(Error::Infeasible("no feasible split of the order".into()));
    }
    if n == 0 {
        let leg = RechargingLeg::new(inst.depot_start(), inst.depot_target());
        return DroneTour::from_elements(vec![TourElement::Leg(leg)], inst);
    }
    // Walk back: leg into w at stage j came from eps at w2, which came from zeta(i, w0).
    let mut ops = Vec::new();
    let mut j = n;
    let mut w = inst.depot_target();
    while j > 0 {
        let w2 = zeta_from[j * n_r + w];
        let (i, w0) = eps_from[j * n_r + w2];
        ops.push(Operation::new(w0, x[i..j].to_vec(), w2));
        j = i;
        w = w0;
    }
    ops.reverse();
    let tour = DroneTour::from_operations(ops, inst)?;
    debug_assert_eq!(tour.makespan, zeta[target]);
    Ok(tour)
}

pub(crate) fn next_permutation(a: &mut [usize]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Global optimum by splitting every destination permutation.
pub fn brute_force_optimum(inst: &Instance) -> Result<DroneTour> {
    if inst.n_d() > MAX_BRUTE_DESTINATIONS || inst.n_r() > MAX_BRUTE_RLS {
        return Err(Error::SizeGuard(format!(
            "brute force is limited to {MAX_BRUTE_DESTINATIONS} destinations and {MAX_BRUTE_RLS} RLs"
        )));
    }
    let mut order: Vec<usize> = (0..inst.n_d()).collect();
    let mut best = split_optimal(&order, inst)?;
    while next_permutation(&mut order) {
        let t = split_optimal(&order, inst)?;
        if t.makespan < best.makespan {
            best = t;
        }
    }
    Ok(best)
}

/// Best tour over the whole neighborhood of `x`, by enumeration.
pub fn bs_r_optimum(inst: &Instance, x: &[usize], p: usize) -> Result<DroneTour> {
    let mut best: Option<DroneTour> = None;
    for y in enumerate_bs_neighbors(x, p)? {
        let t = split_optimal(&y, inst)?;
        if best.as_ref().is_none_or(|b| t.makespan < b.makespan) {
            best = Some(t);
        }
    }
    best.ok_or_else(|| Error::Infeasible("empty neighborhood".into()))
}

/// Key of an operation: start RL, destination set as a bitmask, end RL.
pub type OpKey = (usize, u64, usize);

/// Minimum flight time for every (start RL, set, end RL) that occurs as a
/// consecutive block of some neighbor of `x`, restricted to feasible flights.
pub fn ops_table_oracle(inst: &Instance, x: &[usize], p: usize) -> Result<FxHashMap<OpKey, f64>> {
    let mut table: FxHashMap<OpKey, f64> = FxHashMap::default();
    let n_r = inst.n_r();
    let mut seen_blocks: rustc_hash::FxHashSet<Vec<usize>> = Default::default();
    for y in enumerate_bs_neighbors(x, p)? {
        for i in 0..y.len() {
            for j in (i + 1)..=y.len() {
                let block = &y[i..j];
                if !seen_blocks.insert(block.to_vec()) {
                    continue;
                }
                let set = block.iter().fold(0u64, |m, &v| m | (1u64 << v));
                for w in 0..n_r {
                    for w2 in 0..n_r {
                        let op = Operation::new(w, block.to_vec(), w2);
                        let f = crate::model::operation_flight_time(&op, inst)?;
                        if !inst.op_feasible(w, w2, f) {
                            continue;
                        }
                        let e = table.entry((w, set, w2)).or_insert(f64::INFINITY);
                        if f < *e {
                            *e = f;
                        }
                    }
                }
            }
        }
    }
    Ok(table)
}
