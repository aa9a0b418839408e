//! Shared fixtures for unit tests.

use crate::model::{DroneTour, Instance, Metric, Operation, RechargingLeg, TourElement};

/// Three operations of makespans 4, 7 and 7 joined by two legs of 2.
pub fn worked_example() -> (Instance, DroneTour) {
    let inst = Instance::from_coordinates(
        "figure-one",
        vec![[0.0, 2.0], [2.0, 3.5], [4.0, 2.0], [4.0, 3.5]],
        vec![[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]],
        0,
        2,
        10.0,
        1.0,
        Metric::Manhattan,
    )
    .unwrap();
    let elements = vec![
        TourElement::Leg(RechargingLeg::trivial(0)),
        TourElement::Op(Operation::new(0, vec![0], 0)),
        TourElement::Leg(RechargingLeg::new(0, 1)),
        TourElement::Op(Operation::new(1, vec![1], 1)),
        TourElement::Leg(RechargingLeg::new(1, 2)),
        TourElement::Op(Operation::new(2, vec![2, 3], 2)),
        TourElement::Leg(RechargingLeg::trivial(2)),
    ];
    let tour = DroneTour::from_elements(elements, &inst).unwrap();
    (inst, tour)
}

/// Uniform random coordinates in a square with a 3×3 RL grid; `e_max` is
/// raised until every destination is reachable.
pub fn random_instance(seed: u64, n_d: usize, e_max: f64) -> Instance {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dests: Vec<[f64; 2]> = (0..n_d)
        .map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
        .collect();
    let rls: Vec<[f64; 2]> = (0..9)
        .map(|i| [50.0 * (i % 3) as f64, 50.0 * (i / 3) as f64])
        .collect();
    let start = rng.random_range(0..9);
    let target = rng.random_range(0..9);
    Instance::from_coordinates(
        "rand",
        dests,
        rls,
        start,
        target,
        e_max.max(72.0),
        0.5,
        Metric::Manhattan,
    )
    .unwrap()
}

/// Uniform random destinations and `n_r` uniform random RLs; `e_max` is
/// raised to the smallest value that keeps every destination reachable.
pub fn random_small(seed: u64, n_d: usize, n_r: usize, e_max: f64) -> Instance {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut point = || [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)];
    let dests: Vec<[f64; 2]> = (0..n_d).map(|_| point()).collect();
    let rls: Vec<[f64; 2]> = (0..n_r).map(|_| point()).collect();
    let need = dests
        .iter()
        .map(|&d| {
            rls.iter()
                .map(|&w| 2.0 * crate::model::euclidean(d, w))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let start = (seed as usize) % n_r;
    let target = (seed as usize / 3) % n_r;
    Instance::from_coordinates(
        "small",
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
