//! First stage of the neighborhood DP: shortest drone flights for every
//! operation set that can occur in a neighbor of the center order `x`.
//!
//! Destinations are addressed by their position in `x` (0-based). A state is
//! `(w, S, v)`: the launch RL, the visited positions and the last position.
//! Only sets whose "interior" (positions at least `p` away from both ends)
//! is complete can appear, which is what keeps [`OpSetKey`] small.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::model::{Instance, Operation, EPS};

pub const MAX_P: usize = 32;

/// Compact key of a valid position set: `min`, `max`, and which positions of
/// the boundary window are missing. The window is every position strictly
/// between `min` and `max` that is closer than `p` to one of them; positions
/// in `[min + p, max - p]` are always present.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpSetKey {
    pub min: u16,
    pub max: u16,
    pub absent: u64,
}

#[inline]
fn window_bit(m: usize, big_m: usize, p: usize, j: usize) -> Option<u32> {
    if j <= m || j >= big_m {
        return None;
    }
    if j < m + p {
        return Some((j - m - 1) as u32);
    }
    if j + p > big_m {
        let left = (p - 1).min(big_m - m - 1);
        let first_right = (big_m + 1 - p).max(m + p);
        return Some((left + j - first_right) as u32);
    }
    None
}

impl OpSetKey {
    pub fn singleton(i: usize) -> Self {
        OpSetKey {
            min: i as u16,
            max: i as u16,
            absent: 0,
        }
    }

    /// Key of `positions`, or `None` if some interior position is missing.
    pub fn from_positions(positions: &[usize], p: usize) -> Option<Self> {
        let m = *positions.iter().min()?;
        let big_m = *positions.iter().max()?;
        let mut present_window = 0u64;
        let mut interior_present = 0usize;
        for &j in positions {
            if let Some(b) = window_bit(m, big_m, p, j) {
                present_window |= 1 << b;
            } else if j > m && j < big_m {
                interior_present += 1;
            }
        }
        let interior = if big_m >= m + 2 * p {
            big_m - m - 2 * p + 1
        } else {
            0
        };
        if interior_present != interior {
            return None;
        }
        let width = Self::window_width(m, big_m, p);
        let all = if width == 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        };
        Some(OpSetKey {
            min: m as u16,
            max: big_m as u16,
            absent: all & !present_window,
        })
    }

    fn window_width(m: usize, big_m: usize, p: usize) -> u32 {
        if big_m <= m + 1 {
            return 0;
        }
        let inner = big_m - m - 1;
        let interior = if big_m >= m + 2 * p {
            big_m - m - 2 * p + 1
        } else {
            0
        };
        (inner - interior) as u32
    }

    pub fn contains(&self, j: usize, p: usize) -> bool {
        let (m, big_m) = (self.min as usize, self.max as usize);
        if j == m || j == big_m {
            return true;
        }
        if j < m || j > big_m {
            return false;
        }
        match window_bit(m, big_m, p, j) {
            Some(b) => self.absent & (1 << b) == 0,
            None => true,
        }
    }

    /// Key of `S ∪ {i}`; the caller guarantees the result is valid.
    pub fn insert(&self, i: usize, p: usize) -> Self {
        let (m, big_m) = (self.min as usize, self.max as usize);
        let nm = m.min(i);
        let n_big = big_m.max(i);
        let mut absent = 0u64;
        let width = Self::window_width(nm, n_big, p);
        // Walk the new window: left run then right run.
        let left_end = (nm + p).min(n_big);
        for j in (nm + 1)..left_end {
            if j != i && !self.contains(j, p) {
                absent |= 1 << window_bit(nm, n_big, p, j).unwrap();
            }
        }
        let right_start = (n_big + 1).saturating_sub(p).max(nm + p);
        for j in right_start..n_big {
            if j != i && !self.contains(j, p) {
                absent |= 1 << window_bit(nm, n_big, p, j).unwrap();
            }
        }
        debug_assert!(width <= 64);
        OpSetKey {
            min: nm as u16,
            max: n_big as u16,
            absent,
        }
    }

    pub fn len(&self) -> usize {
        (self.max - self.min) as usize + 1 - self.absent.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn positions(&self, p: usize) -> Vec<usize> {
        (self.min as usize..=self.max as usize)
            .filter(|&j| self.contains(j, p))
            .collect()
    }

    pub fn position_mask(&self, p: usize) -> u128 {
        self.positions(p).into_iter().fold(0u128, |a, j| a | (1u128 << j))
    }
}

/// Positions `i` such that extending a valid state with set `key` by `i`
/// keeps it valid. Positions are 0-based and clamped to `0..n_d`.
pub fn valid_successor_indices(key: &OpSetKey, p: usize, n_d: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(2 * p);
    push_successors(key, p, n_d, &mut out);
    out
}

fn push_successors(key: &OpSetKey, p: usize, n_d: usize, out: &mut Vec<usize>) {
    let (m, big_m) = (key.min as usize, key.max as usize);
    // First range: [M - p + 1, max(M - 1, m + 2p - 1)].
    let lo = (big_m + 1).saturating_sub(p);
    let hi = (big_m.saturating_sub(1)).max(m + 2 * p - 1).min(n_d - 1);
    for i in lo..=hi {
        if !key.contains(i, p) {
            out.push(i);
        }
    }
    // Second range: [max(M + 1, m + 2p), M + p], fill condition on [m + p, i - p].
    let start = (big_m + 1).max(m + 2 * p);
    let end = (big_m + p).min(n_d - 1);
    if start <= end {
        // Every position in [m + p, start - p - 1] lies in the interior, hence present;
        // track the filled prefix incrementally.
        let mut ok = true;
        let mut checked = m + p;
        for i in start..=end {
            while checked + p <= i {
                if !key.contains(checked, p) {
                    ok = false;
                    break;
                }
                checked += 1;
            }
            if !ok {
                break;
            }
            out.push(i);
        }
    }
}

/// Sparse flight-time entry of the operation table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpCost {
    pub start_rl: u16,
    pub end_rl: u16,
    /// Minimum flight time of a valid ordering.
    pub flight: f64,
    /// Final non-terminal state of that ordering in the start RL's graph.
    state: u32,
}

#[derive(Clone, Copy, Debug)]
struct StateRec {
    key: OpSetKey,
    last: u16,
    zeta: f64,
    pred: u32,
}

/// Per-start-RL layered graph kept for reconstruction.
#[derive(Debug, Default)]
struct RlGraph {
    layers: Vec<Vec<StateRec>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpsStats {
    /// Non-terminal states per number of visited destinations (index 0 unused).
    pub states_per_stage: Vec<usize>,
    pub terminal_states: usize,
    pub arcs: usize,
}

impl OpsStats {
    pub fn non_terminal(&self) -> usize {
        self.states_per_stage.iter().sum()
    }
}

/// All feasible valid operation sets with their best flight per RL pair.
#[derive(Debug)]
pub struct OperationCostTable {
    p: usize,
    x: Vec<usize>,
    n_r: usize,
    index: FxHashMap<OpSetKey, u32>,
    keys: Vec<OpSetKey>,
    /// Sorted by `(start_rl, end_rl)`.
    rows: Vec<Vec<OpCost>>,
    graphs: Vec<RlGraph>,
    max_len: usize,
    pub stats: OpsStats,
}

impl OperationCostTable {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn center(&self) -> &[usize] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Largest operation size present.
    pub fn max_operation_len(&self) -> usize {
        self.max_len
    }

    pub fn keys(&self) -> &[OpSetKey] {
        &self.keys
    }

    pub fn entry_id(&self, key: &OpSetKey) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn entries(&self, id: u32) -> &[OpCost] {
        &self.rows[id as usize]
    }

    /// Index range of the entries of `id` launched from `w`.
    pub fn entries_range(&self, id: u32, w: usize) -> std::ops::Range<usize> {
        let row = &self.rows[id as usize];
        let lo = row.partition_point(|c| (c.start_rl as usize) < w);
        let hi = row.partition_point(|c| (c.start_rl as usize) <= w);
        lo..hi
    }

    /// Entries of `id` launched from `w`.
    pub fn entries_from(&self, id: u32, w: usize) -> &[OpCost] {
        &self.rows[id as usize][self.entries_range(id, w)]
    }

    pub fn flight(&self, w: usize, key: &OpSetKey, w2: usize) -> Option<f64> {
        let id = self.entry_id(key)?;
        self.entries_from(id, w)
            .iter()
            .find(|c| c.end_rl as usize == w2)
            .map(|c| c.flight)
    }

    /// Every stored `(w, positions bitmask, w')` with its flight time.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u128, usize, f64)> + '_ {
        self.keys.iter().zip(&self.rows).flat_map(move |(k, row)| {
            let mask = k.position_mask(self.p);
            row.iter()
                .map(move |c| (c.start_rl as usize, mask, c.end_rl as usize, c.flight))
        })
    }

    /// Concrete operation behind an entry.
    pub fn operation(&self, key: &OpSetKey, cost: &OpCost) -> Operation {
        let graph = &self.graphs[cost.start_rl as usize];
        let mut t = key.len();
        let mut idx = cost.state;
        let mut seq = Vec::with_capacity(t);
        while t > 0 {
            let s = graph.layers[t][idx as usize];
            seq.push(self.x[s.last as usize]);
            idx = s.pred;
            t -= 1;
        }
        seq.reverse();
        Operation::new(cost.start_rl as usize, seq, cost.end_rl as usize)
    }

    pub(crate) fn n_r(&self) -> usize {
        self.n_r
    }
}

struct RlBuild {
    graph: RlGraph,
    terminals: Vec<(OpSetKey, Vec<(u16, f64, u32)>)>,
    states_per_stage: Vec<usize>,
    arcs: usize,
}

fn build_for_rl(inst: &Instance, x: &[usize], p: usize, w: usize) -> RlBuild {
    let n = x.len();
    let n_r = inst.n_r();
    let budget = inst.flight_budget();
    let mut layers: Vec<Vec<StateRec>> = vec![Vec::new()];
    let mut arcs = 0usize;
    let mut first = Vec::with_capacity(n);
    for i in 0..n {
        let v = x[i];
        let zeta = inst.fly_rd(w, v);
        arcs += 1;
        if zeta + inst.nearest_rl(v).1 <= budget + EPS {
            first.push(StateRec {
                key: OpSetKey::singleton(i),
                last: i as u16,
                zeta,
                pred: u32::MAX,
            });
        }
    }
    layers.push(first);

    let mut succ = Vec::with_capacity(2 * p);
    loop {
        let cur = layers.last().unwrap();
        if cur.is_empty() || layers.len() > n {
            break;
        }
        let mut next: Vec<StateRec> = Vec::new();
        let mut index: FxHashMap<(OpSetKey, u16), u32> = FxHashMap::default();
        for (si, s) in cur.iter().enumerate() {
            succ.clear();
            push_successors(&s.key, p, n, &mut succ);
            let v = x[s.last as usize];
            for &i in &succ {
                arcs += 1;
                let vi = x[i];
                let zeta = s.zeta + inst.fly_dd(v, vi);
                if zeta + inst.nearest_rl(vi).1 > budget + EPS {
                    continue;
                }
                let key = s.key.insert(i, p);
                match index.entry((key, i as u16)) {
                    std::collections::hash_map::Entry::Occupied(e) => {
                        let rec = &mut next[*e.get() as usize];
                        if zeta < rec.zeta {
                            rec.zeta = zeta;
                            rec.pred = si as u32;
                        }
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(next.len() as u32);
                        next.push(StateRec {
                            key,
                            last: i as u16,
                            zeta,
                            pred: si as u32,
                        });
                    }
                }
            }
        }
        layers.push(next);
    }
    if layers.last().is_some_and(|l| l.is_empty()) {
        layers.pop();
    }

    // Terminal transitions, aggregated per key in first-seen order.
    let mut terminals: Vec<(OpSetKey, Vec<(u16, f64, u32)>)> = Vec::new();
    let mut states_per_stage = vec![0usize; layers.len()];
    for (t, layer) in layers.iter().enumerate().skip(1) {
        states_per_stage[t] = layer.len();
        let mut by_key: FxHashMap<OpSetKey, usize> = FxHashMap::default();
        let mut best: Vec<(OpSetKey, Vec<(f64, u32)>)> = Vec::new();
        for (si, s) in layer.iter().enumerate() {
            let slot = *by_key.entry(s.key).or_insert_with(|| {
                best.push((s.key, vec![(f64::INFINITY, u32::MAX); n_r]));
                best.len() - 1
            });
            let v = x[s.last as usize];
            for w2 in 0..n_r {
                arcs += 1;
                let flight = s.zeta + inst.fly_dr(v, w2);
                if flight < best[slot].1[w2].0 && inst.op_feasible(w, w2, flight) {
                    best[slot].1[w2] = (flight, si as u32);
                }
            }
        }
        for (key, row) in best {
            let entries: Vec<(u16, f64, u32)> = row
                .into_iter()
                .enumerate()
                .filter(|(_, (f, _))| f.is_finite())
                .map(|(w2, (f, st))| (w2 as u16, f, st))
                .collect();
            if !entries.is_empty() {
                terminals.push((key, entries));
            }
        }
    }
    RlBuild {
        graph: RlGraph { layers },
        terminals,
        states_per_stage,
        arcs,
    }
}

/// Builds the operation table for center order `x`.
pub fn build_ops_graph(inst: &Instance, x: &[usize], p: usize) -> Result<OperationCostTable> {
    let n = x.len();
    if n != inst.n_d() {
        return Err(Error::InvalidArgument(format!(
            "order has {n} destinations, instance has {}",
            inst.n_d()
        )));
    }
    crate::oracle::Permutation::from_order(x.to_vec())?;
    if p == 0 || p > MAX_P {
        return Err(Error::InvalidArgument(format!(
            "p must lie in 1..={MAX_P}, got {p}"
        )));
    }
    if n > u16::MAX as usize || inst.n_r() > u16::MAX as usize {
        return Err(Error::SizeGuard("instance too large for 16-bit indices".into()));
    }
    let builds: Vec<RlBuild> = (0..inst.n_r())
        .into_par_iter()
        .map(|w| build_for_rl(inst, x, p, w))
        .collect();

    let mut index: FxHashMap<OpSetKey, u32> = FxHashMap::default();
    let mut keys = Vec::new();
    let mut rows: Vec<Vec<OpCost>> = Vec::new();
    let mut stats = OpsStats::default();
    let mut graphs = Vec::with_capacity(builds.len());
    let mut max_len = 0;
    for (w, b) in builds.into_iter().enumerate() {
        if stats.states_per_stage.len() < b.states_per_stage.len() {
            stats.states_per_stage.resize(b.states_per_stage.len(), 0);
        }
        for (t, c) in b.states_per_stage.iter().enumerate() {
            stats.states_per_stage[t] += c;
        }
        stats.arcs += b.arcs;
        for (key, entries) in b.terminals {
            let id = *index.entry(key).or_insert_with(|| {
                keys.push(key);
                rows.push(Vec::new());
                (keys.len() - 1) as u32
            });
            max_len = max_len.max(key.len());
            stats.terminal_states += entries.len();
            rows[id as usize].extend(entries.into_iter().map(|(w2, flight, state)| OpCost {
                start_rl: w as u16,
                end_rl: w2,
                flight,
                state,
            }));
        }
        graphs.push(b.graph);
    }
    Ok(OperationCostTable {
        p,
        x: x.to_vec(),
        n_r: inst.n_r(),
        index,
        keys,
        rows,
        graphs,
        max_len,
        stats,
    })
}

/// Closed-form upper bound on non-terminal states at stages `k ≥ 3`
/// (requires `n_d ≥ 4p - 2`), plus the exact stage-1 count and the stage-2
/// bound `n_d n_r (2p - 1)`.
pub fn ops_state_bound(n_d: usize, n_r: usize, p: usize) -> Option<f64> {
    if n_d < 4 * p - 2 || p == 0 {
        return None;
    }
    let (n, r, pf) = (n_d as f64, n_r as f64, p as f64);
    let later = r
        * (2.0 * pf - 1.0)
        * 4f64.powi(p as i32 - 1)
        * ((2.0 * pf - 3.0) * pf + (n - 2.0 * pf + 1.0) * n / 2.0);
    Some(n * r + n * r * (2.0 * pf - 1.0) + later)
}
