//! Comparison algorithms: the initial TSP order, LIMOP, randomized
//! 3-nearest-neighbour restarts of RTS and simulated annealing over RTS.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::{subset_dp, ExactConfig};
use crate::model::{Instance, EPS};
use crate::oracle::split_optimal;
use crate::search::{SearchStats, SolveReport};

/// Largest `n_d` for which the initial order is an exact shortest path.
pub const HELD_KARP_LIMIT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Iterations(usize),
    Seconds(f64),
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Budget::Iterations(0) => Err(Error::InvalidArgument("budget must be positive".into())),
            Budget::Seconds(s) if !(s > 0.0) => Err(Error::InvalidArgument("budget must be positive".into())),
            _ => Ok(()),
        }
    }
}

struct BudgetClock {
    budget: Budget,
    started: Instant,
}

impl BudgetClock {
    fn new(budget: Budget) -> Self {
        BudgetClock {
            budget,
            started: Instant::now(),
        }
    }

    fn allows(&self, done: usize) -> bool {
        match self.budget {
            Budget::Iterations(n) => done < n,
            Budget::Seconds(s) => done == 0 || self.started.elapsed() < Duration::from_secs_f64(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaParams {
    /// Initial temperature as a fraction of the initial RTS value.
    pub initial_temperature: f64,
    pub cooling: f64,
    pub proposals_per_temperature: usize,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            initial_temperature: 0.05,
            cooling: 0.95,
            proposals_per_temperature: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub klim: usize,
    pub budget: Budget,
    pub sa: SaParams,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            klim: 2,
            budget: Budget::Iterations(200),
            sa: SaParams::default(),
            seed: 0,
        }
    }
}

/// Node-indexed flight time on the open path `w0 → destinations → wt`:
/// destinations are `0..n`, the start depot `n` and the target depot `n + 1`.
struct PathMetric<'a> {
    inst: &'a Instance,
    n: usize,
}

impl PathMetric<'_> {
    #[inline]
    fn d(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        match (a >= n, b >= n) {
            (false, false) => self.inst.fly_dd(a, b),
            (true, false) => self.inst.fly_rd(self.rl(a), b),
            (false, true) => self.inst.fly_dr(a, self.rl(b)),
            (true, true) => 0.0,
        }
    }

    fn rl(&self, node: usize) -> usize {
        if node == self.n {
            self.inst.depot_start()
        } else {
            self.inst.depot_target()
        }
    }

    fn length(&self, path: &[usize]) -> f64 {
        path.windows(2).map(|w| self.d(w[0], w[1])).sum()
    }

    fn span(&self, path: &[usize], from: usize, to: usize) -> f64 {
        (from..to).map(|i| self.d(path[i], path[i + 1])).sum()
    }

    fn span_reversed(&self, path: &[usize], from: usize, to: usize) -> f64 {
        (from..to).map(|i| self.d(path[i + 1], path[i])).sum()
    }
}

/// Length of the drone path from the start depot through `x` to the target depot.
pub fn tsp_path_length(inst: &Instance, x: &[usize]) -> f64 {
    let metric = PathMetric { inst, n: inst.n_d() };
    let mut path = Vec::with_capacity(x.len() + 2);
    path.push(inst.n_d());
    path.extend_from_slice(x);
    path.push(inst.n_d() + 1);
    metric.length(&path)
}

fn held_karp_path(m: &PathMetric) -> Vec<usize> {
    let n = m.n;
    let inf = f64::INFINITY;
    let mut dp = vec![inf; (1 << n) * n];
    let mut from = vec![u8::MAX; (1 << n) * n];
    for v in 0..n {
        dp[(1 << v) * n + v] = m.d(n, v);
    }
    for s in 1..(1usize << n) {
        for v in 0..n {
            let z = dp[s * n + v];
            if !z.is_finite() {
                continue;
            }
            let mut rest = ((1usize << n) - 1) & !s;
            while rest != 0 {
                let u = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let cell = (s | (1 << u)) * n + u;
                let cand = z + m.d(v, u);
                if cand < dp[cell] {
                    dp[cell] = cand;
                    from[cell] = v as u8;
                }
            }
        }
    }
    let all = (1usize << n) - 1;
    let mut last = 0;
    let mut best = inf;
    for v in 0..n {
        let f = dp[all * n + v] + m.d(v, n + 1);
        if f < best {
            best = f;
            last = v;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut s = all;
    let mut v = last;
    loop {
        order.push(v);
        let prev = from[s * n + v];
        s &= !(1 << v);
        if prev == u8::MAX {
            break;
        }
        v = prev as usize;
    }
    order.reverse();
    order
}

fn nearest_neighbor_path(m: &PathMetric) -> Vec<usize> {
    let n = m.n;
    let mut used = vec![false; n];
    let mut path = Vec::with_capacity(n);
    let mut at = n;
    for _ in 0..n {
        let next = (0..n)
            .filter(|&v| !used[v])
            .min_by(|&a, &b| m.d(at, a).total_cmp(&m.d(at, b)))
            .expect("unvisited destination left");
        used[next] = true;
        path.push(next);
        at = next;
    }
    path
}

/// First-improvement 2-opt over the interior of `path` (endpoints fixed).
fn two_opt(m: &PathMetric, path: &mut [usize]) -> bool {
    let len = path.len();
    let mut improved = false;
    for i in 1..len - 2 {
        for j in i + 1..len - 1 {
            let before = m.d(path[i - 1], path[i]) + m.span(path, i, j) + m.d(path[j], path[j + 1]);
            let after = m.d(path[i - 1], path[j]) + m.span_reversed(path, i, j) + m.d(path[i], path[j + 1]);
            if after < before - EPS {
                path[i..=j].reverse();
                improved = true;
            }
        }
    }
    improved
}

/// Moves segments of one to three interior nodes to a better position.
fn or_opt(m: &PathMetric, path: &mut Vec<usize>) -> bool {
    let mut improved = false;
    for seg in 1..=3 {
        let mut i = 1;
        while i + seg < path.len() {
            let j = i + seg - 1;
            let removed =
                m.d(path[i - 1], path[i]) + m.d(path[j], path[j + 1]) - m.d(path[i - 1], path[j + 1]);
            let mut best: Option<(usize, f64)> = None;
            for k in 0..path.len() - 1 {
                if k + 1 >= i && k <= j {
                    continue;
                }
                let added = m.d(path[k], path[i]) + m.d(path[j], path[k + 1]) - m.d(path[k], path[k + 1]);
                let gain = removed - added;
                if gain > EPS && best.is_none_or(|(_, g)| gain > g) {
                    best = Some((k, gain));
                }
            }
            if let Some((k, _)) = best {
                let block: Vec<usize> = path.drain(i..=j).collect();
                let at = if k < i { k + 1 } else { k + 1 - seg };
                for (o, v) in block.into_iter().enumerate() {
                    path.insert(at + o, v);
                }
                improved = true;
            } else {
                i += 1;
            }
        }
    }
    improved
}

/// Shortest drone path from the start depot through all destinations to the
/// target depot: exact up to [`HELD_KARP_LIMIT`] destinations, otherwise
/// nearest neighbour followed by 2-opt and or-opt to local optimality.
pub fn initial_tsp_sequence(inst: &Instance) -> Vec<usize> {
    let n = inst.n_d();
    let m = PathMetric { inst, n };
    if n <= 1 {
        return (0..n).collect();
    }
    if n <= HELD_KARP_LIMIT {
        return held_karp_path(&m);
    }
    let mut path = vec![n];
    path.extend(nearest_neighbor_path(&m));
    path.push(n + 1);
    loop {
        let a = two_opt(&m, &mut path);
        let b = or_opt(&m, &mut path);
        if !a && !b {
            break;
        }
    }
    path[1..path.len() - 1].to_vec()
}

/// Optimal tour whose operations visit at most `klim` destinations each.
pub fn limop(inst: &Instance, klim: usize) -> Result<SolveReport> {
    limop_with(inst, klim, &ExactConfig::default())
}

pub fn limop_with(inst: &Instance, klim: usize, cfg: &ExactConfig) -> Result<SolveReport> {
    if klim == 0 {
        return Err(Error::InvalidArgument("klim must be at least 1".into()));
    }
    subset_dp(inst, klim, cfg, "limop")
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Nearest-neighbour construction picking uniformly among the three closest
/// unvisited destinations.
pub fn randomized_3nn(inst: &Instance, rng: &mut impl Rng) -> Vec<usize> {
    let n = inst.n_d();
    let m = PathMetric { inst, n };
    let mut left: Vec<usize> = (0..n).collect();
    let mut path = Vec::with_capacity(n);
    let mut at = n;
    while !left.is_empty() {
        left.sort_by(|&a, &b| m.d(at, a).total_cmp(&m.d(at, b)).then(a.cmp(&b)));
        let pick = rng.random_range(0..left.len().min(3));
        at = left.remove(pick);
        path.push(at);
    }
    path
}

/// Best optimal split over repeated randomized 3-NN orders.
pub fn rts_3nn(inst: &Instance, budget: Budget, seed: u64) -> Result<SolveReport> {
    budget.validate()?;
    let started = Instant::now();
    let clock = BudgetClock::new(budget);
    let mut best = None;
    let mut history = Vec::new();
    let mut done = 0;
    while clock.allows(done) {
        let mut rng = restart_rng(seed, done);
        let x = randomized_3nn(inst, &mut rng);
        let t = split_optimal(&x, inst)?;
        if best
            .as_ref()
            .is_none_or(|b: &crate::model::DroneTour| t.makespan < b.makespan)
        {
            history.push(t.makespan);
            best = Some(t);
        }
        done += 1;
    }
    let stats = SearchStats {
        iterations: done,
        neighborhoods: done,
        ..Default::default()
    };
    let mut report = SolveReport::from_tour("rts3nn", best.expect("at least one restart"), stats, started);
    report.history = history;
    Ok(report)
}

/// Applies reconnection `variant` (1..=7) of the segments `b = x[i..j]` and
/// `c = x[j..k]`.
pub fn three_opt_move(x: &[usize], i: usize, j: usize, k: usize, variant: u8) -> Vec<usize> {
    let (a, rest) = x.split_at(i);
    let (b, rest) = rest.split_at(j - i);
    let (c, d) = rest.split_at(k - j);
    let rev = |s: &[usize]| s.iter().rev().copied().collect::<Vec<_>>();
    let (first, second) = match variant {
        1 => (rev(b), c.to_vec()),
        2 => (b.to_vec(), rev(c)),
        3 => (rev(b), rev(c)),
        4 => (c.to_vec(), b.to_vec()),
        5 => (c.to_vec(), rev(b)),
        6 => (rev(c), b.to_vec()),
        7 => (rev(c), rev(b)),
        _ => panic!("3-opt variant must lie in 1..=7"),
    };
    let mut out = Vec::with_capacity(x.len());
    out.extend_from_slice(a);
    out.extend(first);
    out.extend(second);
    out.extend_from_slice(d);
    out
}

/// Simulated annealing over destination orders, each priced by its optimal
/// split; starts from the initial TSP order and returns the best order seen.
pub fn sa_rts_3opt(inst: &Instance, budget: Budget, params: &SaParams, seed: u64) -> Result<SolveReport> {
    budget.validate()?;
    let started = Instant::now();
    let clock = BudgetClock::new(budget);
    let n = inst.n_d();
    let mut x = initial_tsp_sequence(inst);
    let mut current = split_optimal(&x, inst)?;
    let mut best = current.clone();
    let mut history = vec![best.makespan];
    let mut temperature = params.initial_temperature * current.makespan;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while n >= 2 && clock.allows(done) {
        let mut cuts = [
            rng.random_range(0..n),
            rng.random_range(0..n),
            rng.random_range(1..=n),
        ];
        cuts.sort_unstable();
        let [i, j, k] = cuts;
        let variant = rng.random_range(1..=7u8);
        let u: f64 = rng.random();
        done += 1;
        if done % params.proposals_per_temperature.max(1) == 0 {
            temperature *= params.cooling;
        }
        if i == j || j == k {
            continue;
        }
        let y = three_opt_move(&x, i, j, k, variant);
        let t = match split_optimal(&y, inst) {
            Ok(t) => t,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        let delta = t.makespan - current.makespan;
        let accept = delta <= 0.0 || (temperature > 0.0 && u < (-delta / temperature).exp());
        if accept {
            if t.makespan < best.makespan {
                best = t.clone();
                history.push(best.makespan);
            }
            x = y;
            current = t;
        }
    }
    let stats = SearchStats {
        iterations: done,
        neighborhoods: done,
        ..Default::default()
    };
    let mut report = SolveReport::from_tour("sa", best, stats, started);
    report.history = history;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::solve_exact;
    use crate::model::{validate_tour, Metric};
    use crate::oracle::next_permutation;
    use crate::testkit::{random_instance, random_small};

    #[test]
    fn collinear_order() {
        let dests = vec![[3.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let rls = vec![[0.0, 0.0], [4.0, 0.0]];
        let inst =
            Instance::from_coordinates("line", dests, rls, 0, 1, 10.0, 1.0, Metric::Manhattan).unwrap();
        assert_eq!(initial_tsp_sequence(&inst), vec![1, 2, 0]);
    }

    #[test]
    fn held_karp_matches_enumeration() {
        for seed in 0..3 {
            let inst = random_instance(seed, 8, 80.0);
            let x = initial_tsp_sequence(&inst);
            let mut order: Vec<usize> = (0..8).collect();
            let mut best = tsp_path_length(&inst, &order);
            while next_permutation(&mut order) {
                best = best.min(tsp_path_length(&inst, &order));
            }
            assert!((tsp_path_length(&inst, &x) - best).abs() <= 1e-9);
        }
    }

    #[test]
    fn heuristic_path_is_a_permutation() {
        let inst = random_instance(4, 30, 80.0);
        let mut x = initial_tsp_sequence(&inst);
        let nn = {
            let m = PathMetric { inst: &inst, n: 30 };
            nearest_neighbor_path(&m)
        };
        assert!(tsp_path_length(&inst, &x) <= tsp_path_length(&inst, &nn) + 1e-9);
        x.sort_unstable();
        assert_eq!(x, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn limop_full_cap_is_exact_and_monotone() {
        for seed in 0..5 {
            let inst = random_small(seed, 6, 3, 90.0);
            let exact = solve_exact(&inst).unwrap().makespan;
            let values: Vec<f64> = (1..=6).map(|k| limop(&inst, k).unwrap().makespan).collect();
            assert_eq!(values[5], exact);
            assert!(values.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn limop_one_is_per_destination_assignment() {
        let inst = random_small(8, 5, 3, 70.0);
        let l1 = limop(&inst, 1).unwrap();
        assert!(l1.tour.operations().all(|o| o.destinations.len() == 1));
        // Oracle: best over all orders of splitting into singletons.
        let mut order: Vec<usize> = (0..5).collect();
        let mut best = f64::INFINITY;
        loop {
            best = best.min(singleton_split(&inst, &order));
            if !next_permutation(&mut order) {
                break;
            }
        }
        assert!((l1.makespan - best).abs() <= 1e-9);
    }

    fn singleton_split(inst: &Instance, order: &[usize]) -> f64 {
        let n_r = inst.n_r();
        let mut z: Vec<f64> = (0..n_r).map(|w| inst.drive(inst.depot_start(), w)).collect();
        for &v in order {
            let mut next = vec![f64::INFINITY; n_r];
            for w in 0..n_r {
                for w2 in 0..n_r {
                    let f = inst.fly_rd(w, v) + inst.fly_dr(v, w2);
                    if !inst.op_feasible(w, w2, f) {
                        continue;
                    }
                    let e = z[w] + inst.op_makespan(w, w2, f);
                    for (w3, cell) in next.iter_mut().enumerate() {
                        *cell = cell.min(e + inst.drive(w2, w3));
                    }
                }
            }
            z = next;
        }
        z[inst.depot_target()]
    }

    #[test]
    fn restarts_are_deterministic_and_bounded() {
        let inst = random_small(11, 6, 3, 80.0);
        let exact = solve_exact(&inst).unwrap().makespan;
        let a = rts_3nn(&inst, Budget::Iterations(5), 3).unwrap();
        let b = rts_3nn(&inst, Budget::Iterations(5), 3).unwrap();
        let c = rts_3nn(&inst, Budget::Iterations(20), 3).unwrap();
        assert_eq!(a.tour, b.tour);
        assert!(c.makespan <= a.makespan);
        assert!(a.makespan >= exact - 1e-9);
        assert!(validate_tour(&a.tour, &inst).passed());
    }

    #[test]
    fn zero_temperature_never_worsens() {
        let inst = random_instance(13, 12, 80.0);
        let start = split_optimal(&initial_tsp_sequence(&inst), &inst)
            .unwrap()
            .makespan;
        let params = SaParams {
            initial_temperature: 0.0,
            ..Default::default()
        };
        let r = sa_rts_3opt(&inst, Budget::Iterations(100), &params, 1).unwrap();
        assert!(r.makespan <= start);
        let again = sa_rts_3opt(&inst, Budget::Iterations(100), &params, 1).unwrap();
        assert_eq!(r.tour, again.tour);
    }

    #[test]
    fn three_opt_variants_are_permutations() {
        let x: Vec<usize> = (0..7).collect();
        for v in 1..=7 {
            let mut y = three_opt_move(&x, 1, 3, 6, v);
            assert_ne!(y, x);
            y.sort_unstable();
            assert_eq!(y, x);
        }
        assert_eq!(three_opt_move(&x, 1, 3, 6, 4), vec![0, 3, 4, 5, 1, 2, 6]);
    }
}
