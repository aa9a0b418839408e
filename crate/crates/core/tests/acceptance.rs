//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::Instant;

use common::{random_instance, random_order};
use drpe::energy::{
    battery_current, case_study_instance, check_extended_tour, extended_instance, pract, CaseStudyConfig,
    DroneEnergyParams, ExtendedCosts,
};
use drpe::exact::solve_exact;
use drpe::generator::{GeneratorSetting, SettingName, Size};
use drpe::harness::{bench, run_from_args, write_instances, Algo, AlgoOptions};
use drpe::meta_graph::{enumerate_valid_patterns, solve_meta, TransitionLookup};
use drpe::ops_graph::{build_ops_graph, ops_state_bound};
use drpe::oracle::{
    brute_force_optimum, count_bs_neighbors, enumerate_bs_neighbors, neighborhood_lower_bound,
    ops_table_oracle, split_optimal,
};
use drpe::search::{transition_lookup, vlsn, vlsn_ls, SearchConfig};
use drpe::{initial_tsp_sequence, Instance};

const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ac1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for seed in 0..50u64 {
        let n_d = 3 + (seed % 5) as usize;
        let n_r = 2 + (seed % 3) as usize;
        let inst = random_instance(1000 + seed, n_d, n_r, 50.0 + (seed % 7) as f64 * 10.0);
        let exact = solve_exact(&inst).unwrap().makespan;
        let brute = brute_force_optimum(&inst).unwrap().makespan;
        let diff = (exact - brute).abs();
        worst = worst.max(diff);
        if diff > TOL {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("exact vs brute force on 50 instances: {failures} mismatches, max |diff| {worst:.2e}"),
    )
}

fn ac2() -> Outcome {
    let mut failures = 0;
    for seed in 0..100u64 {
        let n_d = 1 + (seed % 12) as usize;
        let n_r = 2 + (seed % 4) as usize;
        let inst = random_instance(2000 + seed, n_d, n_r, 60.0 + (seed % 5) as f64 * 8.0);
        let x = random_order(seed, n_d);
        let a = vlsn(&inst, &x, 1).unwrap().makespan;
        let b = split_optimal(&x, &inst).unwrap().makespan;
        if a != b {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("vlsn(x,1) == split(x) bitwise on 100 instances: {failures} mismatches"),
    )
}

fn convergence_instances() -> Vec<Instance> {
    (0..30u64)
        .map(|seed| {
            let n_d = 5 + (seed % 4) as usize;
            let n_r = 2 + (seed % 3) as usize;
            random_instance(3000 + seed, n_d, n_r, 55.0 + (seed % 6) as f64 * 9.0)
        })
        .collect()
}

fn ac3_ac4() -> (Outcome, Outcome) {
    let mut conv_fail = 0;
    let mut mono_fail = 0;
    let mut worst: f64 = 0.0;
    for (i, inst) in convergence_instances().iter().enumerate() {
        let n_d = inst.n_d();
        let exact = solve_exact(inst).unwrap().makespan;
        for r in 0..3u64 {
            let x = random_order(i as u64 * 3 + r, n_d);
            let mut prev = f64::INFINITY;
            for p in 1..=n_d {
                let v = vlsn(inst, &x, p).unwrap().makespan;
                if v > prev {
                    mono_fail += 1;
                }
                prev = v;
            }
            let diff = (prev - exact).abs();
            worst = worst.max(diff);
            if diff > TOL {
                conv_fail += 1;
            }
        }
    }
    (
        outcome(
            conv_fail == 0,
            format!("vlsn(x,n_d) vs exact, 30 instances x 3 orders: {conv_fail} mismatches, max |diff| {worst:.2e}"),
        ),
        outcome(mono_fail == 0, format!("vlsn non-increasing over p = 1..n_d: {mono_fail} increases")),
    )
}

fn ac5() -> Outcome {
    let x: Vec<usize> = (0..5).collect();
    let got: Vec<Vec<usize>> = enumerate_bs_neighbors(&x, 2)
        .unwrap()
        .into_iter()
        .map(|y| y.into_iter().map(|v| v + 1).collect())
        .collect();
    let want: Vec<Vec<usize>> = vec![
        vec![1, 2, 3, 4, 5],
        vec![1, 2, 3, 5, 4],
        vec![1, 2, 4, 3, 5],
        vec![1, 3, 2, 4, 5],
        vec![1, 3, 2, 5, 4],
        vec![2, 1, 3, 4, 5],
        vec![2, 1, 3, 5, 4],
        vec![2, 1, 4, 3, 5],
    ];
    let listed = got == want;
    let mut bound_ok = true;
    for n in 1..=8 {
        for p in 1..=5 {
            let x: Vec<usize> = (0..n).collect();
            let count = enumerate_bs_neighbors(&x, p).unwrap().len();
            if (count as f64) < neighborhood_lower_bound(n, p) || count as u128 != count_bs_neighbors(n, p) {
                bound_ok = false;
            }
        }
    }
    let published: [(usize, [u128; 4]); 3] = [
        (2, [10, 23, 57, 146]),
        (3, [31, 130, 594, 2807]),
        (4, [62, 411, 3144, 22728]),
    ];
    let mut report = Vec::new();
    for (p, row) in published {
        let ours: Vec<String> = [5, 7, 9, 11]
            .iter()
            .zip(row)
            .map(|(&n, t)| format!("n={n}:{}/{t}", count_bs_neighbors(n, p)))
            .collect();
        report.push(format!("p={p} {}", ours.join(" ")));
    }
    println!("     counted/published: {}", report.join("; "));
    outcome(
        listed && bound_ok,
        format!("(5,2) list matches: {listed}; lower bound and count for n<=8, p<=5: {bound_ok}"),
    )
}

fn ac6() -> Outcome {
    let counts_ok = (1..=8).all(|p| enumerate_valid_patterns(p).len() == 1 << (p - 1));
    let names: Vec<String> = enumerate_valid_patterns(4)
        .iter()
        .map(|p| p.to_string())
        .collect();
    let list_ok = names
        == [
            "({},{})",
            "({k+1},{k-2})",
            "({k+1},{k-1})",
            "({k+2},{k-1})",
            "({k+1},{k})",
            "({k+2},{k})",
            "({k+3},{k})",
            "({k+1,k+2},{k,k-1})",
        ];
    let rows: [[&[u16]; 3]; 8] = [
        [&[1, 5, 6, 7], &[1, 3, 4, 5, 6, 7, 8], &[1, 2, 3, 4, 5, 6, 7, 8]],
        [&[1], &[1, 5, 6, 7], &[1, 3, 4, 5, 6, 7, 8]],
        [&[1, 2], &[1, 5, 6, 7], &[1, 3, 4, 5, 6, 7, 8]],
        [&[2, 5], &[1, 3, 4], &[1, 2, 5, 6, 7]],
        [&[1, 3, 4], &[1, 2, 5, 6, 7], &[1, 3, 4, 5, 6, 7, 8]],
        [&[3, 5, 8], &[1, 2, 3, 4], &[1, 2, 5, 6, 7]],
        [&[4, 6, 8], &[2, 3, 5, 8], &[1, 2, 3, 4]],
        [&[2, 3], &[1, 2], &[1, 5, 6, 7]],
    ];
    let lookup = TransitionLookup::new(4).unwrap();
    let mut bad_rows = 0;
    for (a, row) in rows.iter().enumerate() {
        for h in 1..=3 {
            let got: Vec<u16> = lookup.successors(a, h).iter().map(|b| b + 1).collect();
            if got != row[h - 1] {
                bad_rows += 1;
            }
        }
    }
    outcome(
        counts_ok && list_ok && bad_rows == 0,
        format!("2^(p-1) patterns for p=1..8: {counts_ok}; p=4 list: {list_ok}; transition cells differing: {bad_rows}"),
    )
}

fn ac7() -> Outcome {
    let mut entries = 0;
    let mut bad = 0;
    for seed in 0..10u64 {
        let inst = random_instance(7000 + seed, 6, 2 + (seed % 3) as usize, 1e6);
        let x = random_order(seed, 6);
        for p in [2, 3] {
            let table = build_ops_graph(&inst, &x, p).unwrap();
            let oracle = ops_table_oracle(&inst, &x, p).unwrap();
            let mut seen = 0;
            for (w, positions, w2, flight) in table.iter() {
                let set = x
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| positions & (1 << i) != 0)
                    .fold(0u64, |acc, (_, &v)| acc | 1 << v);
                entries += 1;
                seen += 1;
                match oracle.get(&(w, set, w2)) {
                    Some(&o) if (o - flight).abs() <= TOL => {}
                    _ => bad += 1,
                }
            }
            if seen != oracle.len() {
                bad += oracle.len().abs_diff(seen);
            }
        }
    }
    outcome(
        bad == 0,
        format!("ops table vs oracle, n_d=6, p in {{2,3}}: {entries} entries, {bad} mismatches"),
    )
}

fn ac8() -> Outcome {
    let mut over = 0;
    let mut meta_bad = 0;
    let mut typical = 0;
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..20u64 {
        let n_r = 3 + (seed % 3) as usize;
        let p = 2 + (seed % 3) as usize;
        let e_max = if seed % 2 == 0 { 1e6 } else { 70.0 };
        let inst = random_instance(8000 + seed, 16, n_r, e_max);
        let x = random_order(seed, 16);
        let table = build_ops_graph(&inst, &x, p).unwrap();
        let bound = ops_state_bound(16, n_r, p).unwrap();
        let measured = table.stats.non_terminal() as f64;
        worst_ratio = worst_ratio.max(measured / bound);
        if measured > bound {
            over += 1;
        }
        let sol = solve_meta(&table, transition_lookup(p).unwrap(), &inst).unwrap();
        let pats = enumerate_valid_patterns(p);
        for (k, &states) in sol.stats.states_per_stage.iter().enumerate() {
            if pats.iter().all(|pat| pat.fits(k, 16)) {
                typical += 1;
                if states != n_r << (p - 1) {
                    meta_bad += 1;
                }
            }
        }
    }
    outcome(
        over == 0 && meta_bad == 0 && typical > 0,
        format!(
            "20 instances: ops states over bound {over} (max ratio {worst_ratio:.3}); typical meta stages {typical}, off n_r*2^(p-1): {meta_bad}"
        ),
    )
}

fn ac9(tmp: &Path) -> Outcome {
    let dir = tmp.join("small");
    write_instances(&dir, &SettingName::ALL, Size::Small, 0, 10).unwrap();
    let algos = [Algo::Exact, Algo::VlsnLs, Algo::VlsnVnd, Algo::Rts, Algo::Limop];
    let opts = AlgoOptions::default();
    let mut registry = BTreeMap::new();
    let (out, _) = bench(&dir, &algos, &opts, 0, None, &mut registry).unwrap();
    let gap: HashMap<(String, String), f64> = out
        .rows
        .iter()
        .map(|r| ((r.setting.clone(), r.algorithm.clone()), r.avg_gap_pct))
        .collect();
    let get = |s: &str, a: &str| gap[&(s.to_string(), a.to_string())];
    let mut order_fail = Vec::new();
    println!("     setting   vlsn-vnd  vlsn-ls      rts    limop   (avg gap %)");
    for s in SettingName::ALL {
        let s = s.as_str();
        let (vnd, ls, rts, lim) = (
            get(s, "vlsn-vnd"),
            get(s, "vlsn-ls"),
            get(s, "rts"),
            get(s, "limop"),
        );
        println!("     {s:<8} {vnd:>9.3} {ls:>8.3} {rts:>8.3} {lim:>8.3}");
        if vnd > ls + TOL || ls > rts + TOL {
            order_fail.push(s);
        }
    }
    let below = out.runs.iter().filter(|r| r.value < r.reference - TOL).count();
    let vnd_runs: Vec<f64> = out
        .runs
        .iter()
        .filter(|r| r.algorithm == "vlsn-vnd")
        .map(|r| r.gap_pct)
        .collect();
    let total = vnd_runs.iter().sum::<f64>() / vnd_runs.len() as f64;
    let exact_all = out.runs.iter().filter(|r| r.algorithm == "exact").count() == 90;
    outcome(
        order_fail.is_empty() && below == 0 && total <= 3.0 && out.invalid == 0 && exact_all,
        format!(
            "90 Small instances: ordering violated in {order_fail:?}; runs below exact {below}; invalid {}; vlsn-vnd total gap {total:.3}%",
            out.invalid
        ),
    )
}

fn ac10() -> Outcome {
    let inst = drpe::generate(&GeneratorSetting::new(SettingName::Basis, Size::Small, 0)).unwrap();
    let started = Instant::now();
    let r = solve_exact(&inst);
    let secs = started.elapsed().as_secs_f64();
    let ok = r
        .as_ref()
        .is_ok_and(|r| drpe::validate_tour(&r.tour, &inst).passed());
    outcome(
        ok && secs < 1200.0,
        format!(
            "{} ({} nodes) solved exactly in {secs:.2}s",
            inst.name(),
            inst.n_d() + inst.n_r()
        ),
    )
}

fn ac11() -> Outcome {
    let params = DroneEnergyParams {
        k: 0.8,
        weight: 30.0,
        drag: 0.05,
        xi_max: 21.6e6,
        residual: 0.1,
    };
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let v = i as f64 * 0.7;
        let (at_zero_gamma, _) = battery_current(&params, v, 0.0);
        let closed = params.k * (params.weight.powi(2) + params.drag.powi(2) * v.powi(4)).powf(0.75);
        worst = worst.max((at_zero_gamma - closed).abs() / closed);
        let gamma = -1.5 + i as f64 * 0.06;
        let (at_rest, _) = battery_current(&params, 0.0, gamma);
        let closed = params.k * params.weight.powf(1.5);
        worst = worst.max((at_rest - closed).abs() / closed);
    }
    let closed_ok = worst <= 1e-12;

    let mut degen_worst: f64 = 0.0;
    for seed in 0..20u64 {
        let n_d = 3 + (seed % 6) as usize;
        let inst = random_instance(11_000 + seed, n_d, 3, 70.0);
        let ext = extended_instance(&inst, ExtendedCosts::degenerate(inst.e_max())).unwrap();
        let x = random_order(seed, n_d);
        let pairs = [
            (
                split_optimal(&x, &inst).unwrap().makespan,
                split_optimal(&x, &ext).unwrap().makespan,
            ),
            (
                vlsn(&inst, &x, 3).unwrap().makespan,
                vlsn(&ext, &x, 3).unwrap().makespan,
            ),
            (
                solve_exact(&inst).unwrap().makespan,
                solve_exact(&ext).unwrap().makespan,
            ),
        ];
        for (a, b) in pairs {
            degen_worst = degen_worst.max((a - b).abs());
        }
    }
    let degen_ok = degen_worst <= TOL;

    let costs = ExtendedCosts::default();
    let cfg = SearchConfig {
        single_depot_extension: true,
        ..SearchConfig::default()
    };
    let (mut pract_sum, mut vlsn_sum) = (0.0, 0.0);
    let mut pract_ok = true;
    let mut dominated = true;
    let mut landings = 0;
    for seed in 0..10u64 {
        let base = case_study_instance(&CaseStudyConfig::default(), &costs, seed).unwrap();
        let ext = extended_instance(&base, costs).unwrap();
        let x0 = initial_tsp_sequence(&ext);
        let p = pract(&ext, &costs, &x0).unwrap();
        let check = check_extended_tour(&p.tour, &ext, &costs);
        pract_ok &= check.structure_ok && check.planned_energy_ok;
        landings += check.forced_landings;
        let v = vlsn_ls(&ext, &x0, &cfg).unwrap();
        dominated &= v.makespan <= p.makespan + TOL;
        pract_sum += p.makespan;
        vlsn_sum += v.makespan;
    }
    outcome(
        closed_ok && degen_ok && pract_ok && dominated,
        format!(
            "closed forms max rel err {worst:.1e}; degenerate max |diff| {degen_worst:.1e}; pract valid {pract_ok} ({landings} forced landings); vlsn-ls <= pract {dominated}, mean {:.0}s vs {:.0}s ({:.1}% saved)",
            vlsn_sum / 10.0,
            pract_sum / 10.0,
            100.0 * (pract_sum - vlsn_sum) / pract_sum
        ),
    )
}

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["drpe"];
    full.extend_from_slice(args);
    run_from_args(full)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

/// CSV rows with the runtime column removed.
fn csv_values(path: &Path, runtime: &str) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let skip = rdr.headers().unwrap().iter().position(|h| h == runtime).unwrap();
    rdr.records()
        .map(|r| {
            r.unwrap()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, v)| v.to_string())
                .collect()
        })
        .collect()
}

fn ac12(tmp: &Path) -> Outcome {
    let mut diffs: Vec<String> = Vec::new();
    let mut codes_ok = true;
    let mut roots = Vec::new();
    for rep in ["a", "b"] {
        let root = tmp.join(rep);
        let inst = root.join("inst");
        let s = |p: &Path| p.to_str().unwrap().to_string();
        codes_ok &= run(&[
            "generate",
            "--setting",
            "all",
            "--size",
            "small",
            "--count",
            "1",
            "--seed",
            "5",
            "--out",
            &s(&inst),
        ]) == 0;
        let sol = root.join("sol");
        std::fs::create_dir_all(&sol).unwrap();
        let target = inst.join("small-DenHigh-5.json");
        for algo in [
            "vlsn", "vlsn-ls", "vlsn-vnd", "rts", "exact", "limop", "rts3nn", "sa", "pract",
        ] {
            let out = sol.join(format!("{algo}.json"));
            codes_ok &= run(&[
                "solve",
                "-i",
                &s(&target),
                "--algo",
                algo,
                "--budget",
                "30",
                "--seed",
                "9",
                "--out",
                &s(&out),
            ]) == 0;
        }
        let out = sol.join("pract-extended.json");
        codes_ok &= run(&[
            "solve",
            "-i",
            &s(&target),
            "--algo",
            "vlsn-ls",
            "--model",
            "extended",
            "--out",
            &s(&out),
        ]) == 0;
        codes_ok &= run(&[
            "enumerate",
            "--n",
            "7",
            "--p",
            "3",
            "--list",
            "--out",
            &s(&sol.join("enum.csv")),
        ]) == 0;
        codes_ok &= run(&["dump-lookup", "--p", "5", "--out", &s(&sol.join("lookup.csv"))]) == 0;
        let bench_dir = root.join("bench");
        codes_ok &= run(&[
            "bench",
            "--dir",
            &s(&inst),
            "--algos",
            "vlsn-ls,rts,limop,rts3nn,sa",
            "--budget",
            "20",
            "--seed",
            "3",
            "--out",
            &s(&bench_dir),
            "--save-solutions",
        ]) == 0;
        roots.push(root);
    }
    let (a, b) = (&roots[0], &roots[1]);
    for sub in ["inst", "sol", "bench/solutions"] {
        if files(&a.join(sub)) != files(&b.join(sub)) {
            diffs.push(sub.to_string());
        }
    }
    for (name, runtime) in [("results.csv", "avg_runtime_s"), ("runs.csv", "wall_time_s")] {
        if csv_values(&a.join("bench").join(name), runtime)
            != csv_values(&b.join("bench").join(name), runtime)
        {
            diffs.push(name.to_string());
        }
    }
    if files(&a.join("bench")).get("best_known.json") != files(&b.join("bench")).get("best_known.json") {
        diffs.push("best_known.json".into());
    }
    outcome(
        codes_ok && diffs.is_empty(),
        format!("generate/solve/enumerate/dump-lookup/bench reruns: exit codes ok {codes_ok}; differing outputs {diffs:?}"),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut timed = |name: &'static str, f: &mut dyn FnMut() -> Vec<Outcome>| {
        let started = Instant::now();
        let outs = f();
        let secs = started.elapsed().as_secs_f64();
        let names: Vec<&str> = name.split(',').collect();
        for (n, o) in names.into_iter().zip(outs) {
            println!(
                "{n} {} {} [{secs:.1}s]",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail
            );
            results.push((n, o, secs));
        }
    };
    timed("AC1", &mut || vec![ac1()]);
    timed("AC2", &mut || vec![ac2()]);
    timed("AC3,AC4", &mut || {
        let (a, b) = ac3_ac4();
        vec![a, b]
    });
    timed("AC5", &mut || vec![ac5()]);
    timed("AC6", &mut || vec![ac6()]);
    timed("AC7", &mut || vec![ac7()]);
    timed("AC8", &mut || vec![ac8()]);
    timed("AC9", &mut || vec![ac9(tmp.path())]);
    timed("AC10", &mut || vec![ac10()]);
    timed("AC11", &mut || vec![ac11()]);
    timed("AC12", &mut || vec![ac12(tmp.path())]);
    let failed: Vec<&str> = results
        .iter()
        .filter(|(_, o, _)| !o.pass)
        .map(|(n, _, _)| *n)
        .collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(" "));
        std::process::exit(1);
    }
}
