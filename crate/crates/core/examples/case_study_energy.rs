//! Extended operating model: battery currents, then the order-preserving
//! field planner against local search on synthetic search-and-rescue areas.
//!
//! cargo run --release --example case_study_energy -- [instances]

use drpe::energy::{
    battery_current, case_study_instance, check_extended_tour, extended_instance, pract, CaseStudyConfig,
    DroneEnergyParams, ExtendedCosts,
};
use drpe::{initial_tsp_sequence, vlsn_ls, SearchConfig};

fn main() -> drpe::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let params = DroneEnergyParams {
        k: 0.8,
        weight: 30.0,
        drag: 0.05,
        xi_max: 21.6e6,
        residual: 0.1,
    };
    println!("battery current by speed (level flight):");
    for v in [0.0, 3.0, 6.0, 10.0, 15.0] {
        println!("  V = {v:>4} m/s  I = {:.2}", battery_current(&params, v, 0.0).0);
    }

    let costs = ExtendedCosts::default();
    let cfg = SearchConfig {
        single_depot_extension: true,
        ..SearchConfig::default()
    };
    println!("\nmax flight per battery: {:.0}s", costs.max_flight_time());
    for seed in 0..count {
        let inst = extended_instance(
            &case_study_instance(&CaseStudyConfig::default(), &costs, seed)?,
            costs,
        )?;
        let x0 = initial_tsp_sequence(&inst);
        let field = pract(&inst, &costs, &x0)?;
        let check = check_extended_tour(&field.tour, &inst, &costs);
        let ls = vlsn_ls(&inst, &x0, &cfg)?;
        println!(
            "{}: field planner {:.0}s ({} operations, {} forced landings, max hover {:.0}s) | vlsn-ls {:.0}s ({} operations) in {:.1}s",
            inst.name(),
            field.makespan,
            field.tour.operations().count(),
            check.forced_landings,
            check.max_hover_wait,
            ls.makespan,
            ls.tour.operations().count(),
            ls.wall_time_s
        );
    }
    Ok(())
}
