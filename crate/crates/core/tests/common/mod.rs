#![allow(dead_code)]

use drpe::model::{euclidean, Instance, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform destinations and RLs in a 100 × 100 square; `e_max` is raised to
/// keep every destination reachable.
pub fn random_instance(seed: u64, n_d: usize, n_r: usize, e_max: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = || [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)];
    let dests: Vec<[f64; 2]> = (0..n_d).map(|_| point()).collect();
    let rls: Vec<[f64; 2]> = (0..n_r).map(|_| point()).collect();
    let need = dests
        .iter()
        .map(|&d| {
            rls.iter()
                .map(|&w| 2.0 * euclidean(d, w))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let start = rng.random_range(0..n_r);
    let target = rng.random_range(0..n_r);
    Instance::from_coordinates(
        "random",
        dests,
        rls,
        start,
        target,
        e_max.max(need + 1e-6),
        0.5,
        Metric::Manhattan,
    )
    .unwrap()
}

pub fn random_order(seed: u64, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut x: Vec<usize> = (0..n).collect();
    x.shuffle(&mut rng);
    x
}
