//! Small campaign through the benchmark harness: writes instances to a
//! temporary directory and prints the gap table.
//!
//! cargo run --release --example small_benchmark -- [seeds]

use std::collections::BTreeMap;

use drpe::generator::{SettingName, Size};
use drpe::harness::{bench, latex_table, write_instances, Algo, AlgoOptions};

fn main() -> drpe::Result<()> {
    let seeds: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let dir = std::env::temp_dir().join(format!("drpe-small-{}", std::process::id()));
    write_instances(&dir, &SettingName::ALL, Size::Small, 0, seeds)?;
    let algos = [Algo::Exact, Algo::VlsnLs, Algo::VlsnVnd, Algo::Rts, Algo::Limop];
    let mut registry = BTreeMap::new();
    let (outcome, _) = bench(&dir, &algos, &AlgoOptions::default(), 0, None, &mut registry)?;
    println!(
        "{:<9} {:<9} {:>8} {:>8} {:>6} {:>9}",
        "setting", "algo", "avg gap", "worst", "opt", "runtime"
    );
    for r in &outcome.rows {
        println!(
            "{:<9} {:<9} {:>7.2}% {:>7.2}% {:>3}/{:<2} {:>8.3}s",
            r.setting,
            r.algorithm,
            r.avg_gap_pct,
            r.worst_gap_pct,
            r.optimum_found,
            r.instances,
            r.avg_runtime_s
        );
    }
    println!("\n{}", latex_table(&outcome.rows));
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
