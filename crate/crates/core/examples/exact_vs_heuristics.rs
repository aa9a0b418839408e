//! Optimality gaps of every heuristic against the exact subset DP on a few
//! Small instances.
//!
//! cargo run --release --example exact_vs_heuristics -- [count]

use drpe::baselines::{limop, rts_3nn, sa_rts_3opt, Budget, SaParams};
use drpe::generator::{GeneratorSetting, SettingName, Size};
use drpe::{initial_tsp_sequence, rts, solve_exact, vlsn_ls, vlsn_vnd, SearchConfig, SolveReport};

fn main() -> drpe::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = SearchConfig {
        single_depot_extension: true,
        ..SearchConfig::default()
    };
    for name in [SettingName::Basis, SettingName::EnLow, SettingName::SpLow] {
        for seed in 0..count {
            let inst = drpe::generate(&GeneratorSetting::new(name, Size::Small, seed))?;
            let exact = solve_exact(&inst)?;
            let x0 = initial_tsp_sequence(&inst);
            let runs: Vec<SolveReport> = vec![
                vlsn_ls(&inst, &x0, &cfg)?,
                vlsn_vnd(&inst, &x0, &cfg)?,
                rts(&inst)?,
                limop(&inst, 2)?,
                rts_3nn(&inst, Budget::Iterations(100), seed)?,
                sa_rts_3opt(&inst, Budget::Iterations(200), &SaParams::default(), seed)?,
            ];
            let gaps: Vec<String> = runs
                .iter()
                .map(|r| {
                    format!(
                        "{} {:.2}%",
                        r.algorithm,
                        100.0 * (r.makespan - exact.makespan) / exact.makespan
                    )
                })
                .collect();
            println!(
                "{:<16} exact {:>8.1} ({:.2}s) | {}",
                inst.name(),
                exact.makespan,
                exact.wall_time_s,
                gaps.join(", ")
            );
        }
    }
    Ok(())
}
