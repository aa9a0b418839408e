mod common;

use common::{random_instance, random_order};
use drpe::baselines::{limop, rts_3nn, sa_rts_3opt, Budget, SaParams};
use drpe::energy::{battery_current, extended_instance, DroneEnergyParams, ExtendedCosts};
use drpe::exact::solve_exact;
use drpe::generator::{generate, GeneratorSetting, SettingName, Size};
use drpe::io::{instance_from_json, instance_to_json, tour_from_json, tour_to_json, SolutionMeta};
use drpe::meta_graph::solve_meta;
use drpe::model::{operation_flight_time, operation_makespan, tour_makespan, RechargingLeg, TourElement};
use drpe::ops_graph::build_ops_graph;
use drpe::oracle::{
    brute_force_optimum, bs_r_optimum, count_bs_neighbors, enumerate_bs_neighbors, is_bs_neighbor,
    neighborhood_lower_bound, ops_table_oracle, split_optimal,
};
use drpe::search::{transition_lookup, vlsn, vlsn_ls, vlsn_vnd, SearchConfig};
use drpe::{initial_tsp_sequence, rts, validate_tour, DroneTour};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn operation_makespan_dominates_both_vehicles(seed in any::<u64>(), n_d in 2usize..7, n_r in 2usize..5) {
        let inst = random_instance(seed, n_d, n_r, 80.0);
        let tour = split_optimal(&random_order(seed, n_d), &inst).unwrap();
        for op in tour.operations() {
            let m = operation_makespan(op, &inst).unwrap();
            prop_assert!(m >= operation_flight_time(op, &inst).unwrap());
            prop_assert!(m >= inst.drive(op.start_rl, op.end_rl));
        }
    }

    #[test]
    fn trivial_legs_do_not_change_the_makespan(seed in any::<u64>(), n_d in 2usize..7, at in 0usize..20) {
        let inst = random_instance(seed, n_d, 3, 70.0);
        let tour = split_optimal(&random_order(seed, n_d), &inst).unwrap();
        let mut elements = tour.elements.clone();
        let i = at % (elements.len() + 1);
        let rl = if i == 0 { elements[0].start_rl() } else { elements[i - 1].end_rl() };
        elements.insert(i, TourElement::Leg(RechargingLeg::trivial(rl)));
        let padded = DroneTour { elements, makespan: 0.0 };
        prop_assert_eq!(tour_makespan(&padded, &inst).unwrap(), tour.makespan);
        let trimmed = DroneTour { elements: padded.without_redundant_legs(), makespan: 0.0 };
        prop_assert_eq!(tour_makespan(&trimmed, &inst).unwrap(), tour.makespan);
    }

    #[test]
    fn neighborhoods_are_nested_and_counted(n in 1usize..9, p in 1usize..6) {
        let x: Vec<usize> = (0..n).collect();
        let small = enumerate_bs_neighbors(&x, p).unwrap();
        let large = enumerate_bs_neighbors(&x, p + 1).unwrap();
        prop_assert!(small.iter().all(|y| large.contains(y)));
        prop_assert_eq!(small.len() as u128, count_bs_neighbors(n, p));
        prop_assert!(small.len() as f64 >= neighborhood_lower_bound(n, p));
        prop_assert!(small.iter().all(|y| is_bs_neighbor(&x, y, p).unwrap()));
    }

    #[test]
    fn ops_table_matches_the_block_oracle(seed in any::<u64>(), n_d in 3usize..7, p in 1usize..4, loose in any::<bool>()) {
        let inst = random_instance(seed, n_d, 3, if loose { 1e6 } else { 70.0 });
        let x = random_order(seed, n_d);
        let table = build_ops_graph(&inst, &x, p).unwrap();
        let oracle = ops_table_oracle(&inst, &x, p).unwrap();
        let mut seen = 0;
        for (w, positions, w2, flight) in table.iter() {
            let mut set = 0u64;
            for (i, &v) in x.iter().enumerate() {
                if positions & (1 << i) != 0 {
                    set |= 1 << v;
                }
            }
            let want = oracle.get(&(w, set, w2)).copied();
            prop_assert!(want.is_some_and(|o| (o - flight).abs() <= 1e-9), "({w},{set:b},{w2}) {flight} vs {want:?}");
            seen += 1;
        }
        prop_assert_eq!(seen, oracle.len());
    }

    #[test]
    fn ops_table_values_shrink_with_p(seed in any::<u64>(), n_d in 3usize..8, p in 1usize..4) {
        let inst = random_instance(seed, n_d, 3, 1e6);
        let x = random_order(seed, n_d);
        let a = build_ops_graph(&inst, &x, p).unwrap();
        let b = build_ops_graph(&inst, &x, p + 1).unwrap();
        let larger: std::collections::HashMap<(usize, u128, usize), f64> =
            b.iter().map(|(w, s, w2, f)| ((w, s, w2), f)).collect();
        for (w, s, w2, f) in a.iter() {
            let g = larger.get(&(w, s, w2)).copied();
            prop_assert!(g.is_some_and(|g| g <= f));
        }
    }

    #[test]
    fn meta_solution_is_the_best_neighbor(seed in any::<u64>(), n_d in 2usize..7, n_r in 2usize..5, p in 1usize..5) {
        let inst = random_instance(seed, n_d, n_r, 60.0 + (seed % 50) as f64);
        let x = random_order(seed, n_d);
        let p = p.min(n_d);
        let table = build_ops_graph(&inst, &x, p).unwrap();
        let sol = solve_meta(&table, transition_lookup(p).unwrap(), &inst).unwrap();
        prop_assert!(is_bs_neighbor(&x, &sol.tour.destination_order(), p).unwrap());
        prop_assert!(validate_tour(&sol.tour, &inst).passed());
        let oracle = bs_r_optimum(&inst, &x, p).unwrap();
        prop_assert!((sol.value - oracle.makespan).abs() <= 1e-9);
    }

    #[test]
    fn vlsn_is_monotone_in_p(seed in any::<u64>(), n_d in 3usize..9) {
        let inst = random_instance(seed, n_d, 4, 70.0);
        let x = random_order(seed, n_d);
        let mut prev = f64::INFINITY;
        for p in 1..=n_d {
            let v = vlsn(&inst, &x, p).unwrap();
            prop_assert!(v.makespan <= prev);
            prop_assert!(is_bs_neighbor(&x, &v.tour.destination_order(), p).unwrap());
            prev = v.makespan;
        }
    }

    #[test]
    fn exact_lower_bounds_every_heuristic(seed in any::<u64>(), n_d in 2usize..7, n_r in 2usize..5) {
        let inst = random_instance(seed, n_d, n_r, 60.0 + (seed % 60) as f64);
        let exact = solve_exact(&inst).unwrap();
        let brute = brute_force_optimum(&inst).unwrap();
        prop_assert!((exact.makespan - brute.makespan).abs() <= 1e-9);
        prop_assert!(validate_tour(&exact.tour, &inst).passed());
        let x0 = initial_tsp_sequence(&inst);
        let full = vlsn(&inst, &random_order(seed, n_d), n_d).unwrap();
        prop_assert!((full.makespan - exact.makespan).abs() <= 1e-9);
        let cfg = SearchConfig { single_depot_extension: true, ..SearchConfig::default() };
        let reports = vec![
            rts(&inst).unwrap(),
            vlsn(&inst, &x0, 2).unwrap(),
            vlsn_ls(&inst, &x0, &cfg).unwrap(),
            vlsn_vnd(&inst, &x0, &cfg).unwrap(),
            limop(&inst, 2).unwrap(),
            rts_3nn(&inst, Budget::Iterations(10), seed).unwrap(),
            sa_rts_3opt(&inst, Budget::Iterations(30), &SaParams::default(), seed).unwrap(),
        ];
        for r in reports {
            prop_assert!(validate_tour(&r.tour, &inst).passed(), "{} invalid", r.algorithm);
            prop_assert!(r.makespan >= exact.makespan - 1e-9, "{} below exact", r.algorithm);
            prop_assert_eq!(r.makespan, r.tour.makespan);
            prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]), "{} history", r.algorithm);
        }
    }

    #[test]
    fn limop_is_monotone_in_klim(seed in any::<u64>(), n_d in 2usize..8) {
        let inst = random_instance(seed, n_d, 3, 90.0);
        let mut prev = f64::INFINITY;
        for k in 1..=n_d {
            let v = limop(&inst, k).unwrap().makespan;
            prop_assert!(v <= prev);
            prev = v;
        }
        prop_assert_eq!(prev, solve_exact(&inst).unwrap().makespan);
    }

    #[test]
    fn randomized_baselines_are_deterministic(seed in any::<u64>(), n_d in 2usize..10) {
        let inst = random_instance(seed, n_d, 4, 80.0);
        let a = rts_3nn(&inst, Budget::Iterations(8), seed).unwrap();
        let b = rts_3nn(&inst, Budget::Iterations(8), seed).unwrap();
        prop_assert_eq!(a.tour, b.tour);
        let a = sa_rts_3opt(&inst, Budget::Iterations(40), &SaParams::default(), seed).unwrap();
        let b = sa_rts_3opt(&inst, Budget::Iterations(40), &SaParams::default(), seed).unwrap();
        prop_assert_eq!(a.tour, b.tour);
    }

    #[test]
    fn solutions_round_trip(seed in any::<u64>(), n_d in 1usize..8) {
        let inst = random_instance(seed, n_d, 3, 80.0);
        let back = instance_from_json(&instance_to_json(&inst)).unwrap();
        prop_assert_eq!(&back, &inst);
        let tour = split_optimal(&random_order(seed, n_d), &inst).unwrap();
        let (t2, _) = tour_from_json(&tour_to_json(&tour, SolutionMeta::default())).unwrap();
        prop_assert_eq!(&t2, &tour);
        prop_assert!(validate_tour(&t2, &back).passed());
    }

    #[test]
    fn degenerate_extended_model_matches_base(seed in any::<u64>(), n_d in 2usize..9, p in 1usize..5) {
        let inst = random_instance(seed, n_d, 4, 70.0);
        let ext = extended_instance(&inst, ExtendedCosts::degenerate(inst.e_max())).unwrap();
        let x = random_order(seed, n_d);
        let a = vlsn(&inst, &x, p).unwrap().makespan;
        let b = vlsn(&ext, &x, p).unwrap().makespan;
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn battery_current_grows_with_speed(v in 0.0f64..30.0, dv in 0.0f64..5.0, gamma in 0.0f64..1.5) {
        let params = DroneEnergyParams { k: 0.8, weight: 30.0, drag: 0.05, xi_max: 21.6e6, residual: 0.1 };
        let (a, _) = battery_current(&params, v, gamma);
        let (b, _) = battery_current(&params, v + dv, gamma);
        prop_assert!(b >= a);
        prop_assert!(a.is_finite());
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn generated_instances_are_reproducible(seed in 0u64..1000, which in 0usize..9, large in any::<bool>()) {
        let size = if large { Size::Large } else { Size::Small };
        let s = GeneratorSetting::new(SettingName::ALL[which], size, seed);
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        prop_assert_eq!(instance_to_json(&a), instance_to_json(&b));
        for (i, w) in a.rls().iter().enumerate() {
            let x = (i % s.cols) as f64 * s.l / (s.cols - 1) as f64;
            let y = (i / s.cols) as f64 * s.l / (s.rows - 1) as f64;
            prop_assert_eq!(*w, [x, y]);
        }
        prop_assert_eq!(a.rls()[s.n_r - 1], [s.l, s.l]);
    }
}
