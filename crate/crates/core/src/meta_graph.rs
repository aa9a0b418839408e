//! Second stage of the neighborhood DP: composes operation sets from the
//! [`OperationCostTable`] and recharging legs into the best tour of the
//! neighborhood.
//!
//! After `k` destinations, the visited set of any neighbor of `x` is
//! `([k] \ S⁺) ∪ S⁻`, where `S⁻` holds ranks after `k` pulled forward and
//! `S⁺` ranks up to `k` pushed back. Both sets live within `p` of `k`, so a
//! [`MetaPattern`] stores them as offsets and the same patterns and
//! transitions apply at every stage. Ranks are 1-based positions in `x`.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{DroneTour, Instance};
use crate::ops_graph::{OpSetKey, OperationCostTable};

/// Largest neighborhood parameter the meta graph accepts.
pub const MAX_META_P: usize = 10;

/// `(S⁻, S⁺)` relative to the stage `k`.
///
/// Bit `d - 1` of `minus` stands for rank `k + d` (`d ∈ 1..p`), bit `e` of
/// `plus` for rank `k - e` (`e ∈ 0..p-1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MetaPattern {
    pub minus: u32,
    pub plus: u32,
}

impl MetaPattern {
    pub const EMPTY: MetaPattern = MetaPattern { minus: 0, plus: 0 };

    /// Offsets `d` of `S⁻ = {k + d}`, ascending.
    pub fn minus_offsets(&self) -> Vec<i64> {
        (0..32)
            .filter(|b| self.minus & (1 << b) != 0)
            .map(|b| b as i64 + 1)
            .collect()
    }

    /// Signed offsets `-e` of `S⁺ = {k - e}`, ascending.
    pub fn plus_offsets(&self) -> Vec<i64> {
        let mut v: Vec<i64> = (0..32)
            .filter(|b| self.plus & (1 << b) != 0)
            .map(|b| -(b as i64))
            .collect();
        v.sort();
        v
    }

    pub fn minus_ranks(&self, k: usize) -> Vec<i64> {
        self.minus_offsets().into_iter().map(|d| k as i64 + d).collect()
    }

    pub fn plus_ranks(&self, k: usize) -> Vec<i64> {
        self.plus_offsets().into_iter().map(|e| k as i64 + e).collect()
    }

    pub fn cardinality(&self) -> u32 {
        self.minus.count_ones()
    }

    /// Whether the pattern's absolute ranks fit in `1..=n_d` at stage `k`.
    pub fn fits(&self, k: usize, n_d: usize) -> bool {
        let max_minus = if self.minus == 0 {
            0
        } else {
            32 - self.minus.leading_zeros() as usize
        };
        let max_plus = if self.plus == 0 {
            0
        } else {
            32 - self.plus.leading_zeros() as usize
        }; // e + 1
        (self.minus == 0 || k + max_minus <= n_d) && (self.plus == 0 || max_plus <= k)
    }

    fn is_valid(&self, p: usize) -> bool {
        let c = self.minus.count_ones();
        if c != self.plus.count_ones() || 2 * c as usize > p {
            return false;
        }
        if c == 0 {
            return true;
        }
        let dmax = 32 - self.minus.leading_zeros() as usize; // largest d
        let emax = 32 - self.plus.leading_zeros() as usize - 1; // largest e
        dmax <= p - 1 && emax + 2 <= p && dmax + emax < p
    }
}

fn offset_label(o: i64) -> String {
    match o.cmp(&0) {
        std::cmp::Ordering::Equal => "k".into(),
        std::cmp::Ordering::Greater => format!("k+{o}"),
        std::cmp::Ordering::Less => format!("k{o}"),
    }
}

impl fmt::Display for MetaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let minus: Vec<String> = self.minus_offsets().into_iter().map(offset_label).collect();
        let mut plus_desc = self.plus_offsets();
        plus_desc.reverse();
        let plus: Vec<String> = plus_desc.into_iter().map(offset_label).collect();
        write!(f, "({{{}}},{{{}}})", minus.join(","), plus.join(","))
    }
}

/// Every valid pattern for `p`, ordered by cardinality, then `S⁺` (signed
/// offsets ascending), then `S⁻`.
pub fn enumerate_valid_patterns(p: usize) -> Vec<MetaPattern> {
    let p = p.max(1);
    assert!(p <= 31, "p too large for pattern enumeration");
    let width = (p - 1) as u32;
    let mut out = Vec::new();
    for minus in 0u32..(1 << width) {
        for plus in 0u32..(1 << width) {
            let pat = MetaPattern { minus, plus };
            if pat.is_valid(p) {
                out.push(pat);
            }
        }
    }
    out.sort_by(|a, b| {
        a.cardinality()
            .cmp(&b.cardinality())
            .then_with(|| a.plus_offsets().cmp(&b.plus_offsets()))
            .then_with(|| a.minus_offsets().cmp(&b.minus_offsets()))
    });
    out
}

/// Arc condition between pattern `a` at stage `k` and `b` at stage `k + h`.
pub fn valid_pattern_transitions(a: &MetaPattern, b: &MetaPattern, h: usize, _p: usize) -> bool {
    if h == 0 {
        return a == b;
    }
    let h = h as i64;
    let a_minus = a.minus_offsets();
    let a_plus = a.plus_offsets();
    // b's ranks expressed relative to k.
    let b_minus: Vec<i64> = b.minus_offsets().into_iter().map(|d| d + h).collect();
    let b_plus: Vec<i64> = b.plus_offsets().into_iter().map(|e| e + h).collect();
    let pulled_beyond = a_minus.iter().filter(|&&j| j > h).all(|j| b_minus.contains(j));
    let pulled_within = a_minus.iter().filter(|&&j| j <= h).all(|j| !b_plus.contains(j));
    let pushed = b_plus.iter().filter(|&&j| j <= 0).all(|j| a_plus.contains(j));
    pulled_beyond && pulled_within && pushed
}

/// Ranks of the destinations visited by the transition's operation:
/// `({k+1..k+h} ∪ A⁺ ∪ B⁻) \ (B⁺ ∪ A⁻)`, ascending.
pub fn transition_destination_set(a: &MetaPattern, b: &MetaPattern, k: usize, h: usize) -> Vec<usize> {
    let mut out = Vec::new();
    push_transition_positions(a, b, k, h, &mut out);
    out.iter_mut().for_each(|j| *j += 1);
    out
}

/// Same set as 0-based positions, written into `out` without allocating.
fn push_transition_positions(a: &MetaPattern, b: &MetaPattern, k: usize, h: usize, out: &mut Vec<usize>) {
    out.clear();
    let kh = k + h;
    let in_a_minus = |j: usize| j > k && j - k - 1 < 32 && a.minus & (1 << (j - k - 1)) != 0;
    let in_b_plus = |j: usize| j <= kh && kh - j < 32 && b.plus & (1 << (kh - j)) != 0;
    // A⁺ lies at or below k: walk e downwards for ascending ranks.
    for e in (0..32).rev() {
        if a.plus & (1 << e) != 0 && !in_b_plus(k - e) {
            out.push(k - e - 1);
        }
    }
    for j in (k + 1)..=kh {
        if !in_a_minus(j) && !in_b_plus(j) {
            out.push(j - 1);
        }
    }
    for d in 1..=32 {
        if b.minus & (1 << (d - 1)) != 0 && !in_a_minus(kh + d) {
            out.push(kh + d - 1);
        }
    }
}

/// Precomputed pattern transitions for one `p`.
#[derive(Clone, Debug)]
pub struct TransitionLookup {
    p: usize,
    patterns: Vec<MetaPattern>,
    /// `next[h - 1][a]`: patterns `b` reachable from `a` with gap `h`.
    next: Vec<Vec<Vec<u16>>>,
}

impl TransitionLookup {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 || p > MAX_META_P {
            return Err(Error::SizeGuard(format!(
                "meta graph supports 1 <= p <= {MAX_META_P}, got {p}"
            )));
        }
        let patterns = enumerate_valid_patterns(p);
        // From h = 2p - 2 on every pair is allowed, so one more level covers all gaps.
        let levels = (2 * p).saturating_sub(1).max(1);
        let next = (1..=levels)
            .map(|h| {
                patterns
                    .iter()
                    .map(|a| {
                        patterns
                            .iter()
                            .enumerate()
                            .filter(|(_, b)| valid_pattern_transitions(a, b, h, p))
                            .map(|(i, _)| i as u16)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(TransitionLookup { p, patterns, next })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn patterns(&self) -> &[MetaPattern] {
        &self.patterns
    }

    /// Pattern indices reachable from pattern `a` with gap `h ≥ 1`.
    pub fn successors(&self, a: usize, h: usize) -> &[u16] {
        let level = h.min(self.next.len());
        &self.next[level - 1][a]
    }

    /// Lookup table as CSV: id, S⁻, S⁺, then one column per `h` in `1..=max_h`
    /// listing reachable ids (1-based, `;`-separated).
    pub fn to_csv(&self, max_h: usize) -> String {
        let mut s = String::from("id,pattern");
        for h in 1..=max_h {
            s.push_str(&format!(",h{h}"));
        }
        s.push('\n');
        for (i, pat) in self.patterns.iter().enumerate() {
            s.push_str(&format!("{},\"{}\"", i + 1, pat));
            for h in 1..=max_h {
                let ids: Vec<String> = self
                    .successors(i, h)
                    .iter()
                    .map(|b| (b + 1).to_string())
                    .collect();
                s.push_str(&format!(",{}", ids.join(";")));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MetaStats {
    /// Encoded states `(pattern, w)` per stage.
    pub states_per_stage: Vec<usize>,
    /// States with a finite value.
    pub reached_states: usize,
    pub arcs: usize,
}

#[derive(Debug)]
pub struct MetaSolution {
    pub tour: DroneTour,
    pub value: f64,
    pub stats: MetaStats,
}

#[derive(Clone, Copy)]
struct EpsFrom {
    stage: u32,
    pattern: u16,
    rl: u16,
    entry: u32,
    slot: u32,
}

/// Best tour of the neighborhood described by `table`.
pub fn solve_meta(
    table: &OperationCostTable,
    lookup: &TransitionLookup,
    inst: &Instance,
) -> Result<MetaSolution> {
    let x = table.center();
    let n = x.len();
    let p = table.p();
    if lookup.p() != p {
        return Err(Error::InvalidArgument(format!(
            "lookup built for p = {}, table for p = {p}",
            lookup.p()
        )));
    }
    let n_r = inst.n_r();
    if table.n_r() != n_r || n != inst.n_d() {
        return Err(Error::InvalidArgument(
            "operation table does not match the instance".into(),
        ));
    }
    let pats = lookup.patterns();
    let np = pats.len();
    let inf = f64::INFINITY;
    let cell = |k: usize, a: usize, w: usize| (k * np + a) * n_r + w;

    let mut stats = MetaStats {
        states_per_stage: vec![0; n + 1],
        ..Default::default()
    };
    let fits: Vec<Vec<bool>> = (0..=n)
        .map(|k| pats.iter().map(|pat| pat.fits(k, n)).collect())
        .collect();
    for k in 0..=n {
        stats.states_per_stage[k] = fits[k].iter().filter(|&&f| f).count() * n_r;
    }

    let size = (n + 1) * np * n_r;
    let mut zeta = vec![inf; size];
    let mut zeta_from = vec![u16::MAX; size];
    let mut eps = vec![inf; size];
    let mut eps_from: Vec<Option<EpsFrom>> = vec![None; size];
    let empty = pats.iter().position(|q| *q == MetaPattern::EMPTY).unwrap();
    for w in 0..n_r {
        zeta[cell(0, empty, w)] = inst.drive(inst.depot_start(), w);
    }
    let max_h = table.max_operation_len();
    let mut positions = Vec::with_capacity(2 * p + max_h);

    for k in 0..=n {
        if k > 0 {
            for b in 0..np {
                if !fits[k][b] {
                    continue;
                }
                for w2 in 0..n_r {
                    let e = eps[cell(k, b, w2)];
                    if !e.is_finite() {
                        continue;
                    }
                    for w3 in 0..n_r {
                        stats.arcs += 1;
                        let val = e + inst.drive(w2, w3);
                        let c = cell(k, b, w3);
                        if val < zeta[c] {
                            zeta[c] = val;
                            zeta_from[c] = w2 as u16;
                        }
                    }
                }
            }
        }
        if k == n {
            break;
        }
        for a in 0..np {
            if !fits[k][a] {
                continue;
            }
            let base = cell(k, a, 0);
            if zeta[base..base + n_r].iter().all(|z| !z.is_finite()) {
                continue;
            }
            for h in 1..=max_h.min(n - k) {
                for &b in lookup.successors(a, h) {
                    let b = b as usize;
                    if !fits[k + h][b] {
                        continue;
                    }
                    push_transition_positions(&pats[a], &pats[b], k, h, &mut positions);
                    let Some(key) = OpSetKey::from_positions(&positions, p) else {
                        continue;
                    };
                    let Some(id) = table.entry_id(&key) else {
                        continue;
                    };
                    for w in 0..n_r {
                        let z = zeta[base + w];
                        if !z.is_finite() {
                            continue;
                        }
                        let range = table.entries_range(id, w);
                        let first = range.start;
                        for (j, c) in table.entries(id)[range].iter().enumerate() {
                            stats.arcs += 1;
                            let w2 = c.end_rl as usize;
                            let val = z + inst.op_makespan(w, w2, c.flight);
                            let t = cell(k + h, b, w2);
                            if val < eps[t] {
                                eps[t] = val;
                                eps_from[t] = Some(EpsFrom {
                                    stage: k as u32,
                                    pattern: a as u16,
                                    rl: w as u16,
                                    entry: id,
                                    slot: (first + j) as u32,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    stats.reached_states = zeta.iter().filter(|z| z.is_finite()).count();

    let goal = cell(n, empty, inst.depot_target());
    let value = zeta[goal];
    if !value.is_finite() {
        return Err(Error::Infeasible("no feasible tour in the neighborhood".into()));
    }
    let mut ops = Vec::new();
    let (mut k, mut a, mut w) = (n, empty, inst.depot_target());
    while k > 0 {
        let w2 = zeta_from[cell(k, a, w)] as usize;
        let from = eps_from[cell(k, a, w2)].expect("reached state has a predecessor");
        let key = table.keys()[from.entry as usize];
        let cost = &table.entries(from.entry)[from.slot as usize];
        ops.push(table.operation(&key, cost));
        k = from.stage as usize;
        a = from.pattern as usize;
        w = from.rl as usize;
    }
    ops.reverse();
    let tour = DroneTour::from_operations(ops, inst)?;
    debug_assert_eq!(tour.makespan, value);
    Ok(MetaSolution { tour, value, stats })
}
