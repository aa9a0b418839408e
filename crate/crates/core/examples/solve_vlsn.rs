//! Improves the TSP order of a Basis instance with one neighborhood, local
//! search and variable neighborhood descent.
//!
//! cargo run --release --example solve_vlsn -- [seed]

use drpe::generator::{GeneratorSetting, SettingName, Size};
use drpe::{initial_tsp_sequence, rts, validate_tour, vlsn, vlsn_ls, vlsn_vnd, SearchConfig, TourElement};

fn main() -> drpe::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let inst = drpe::generate(&GeneratorSetting::new(SettingName::Basis, Size::Small, seed))?;
    let x0 = initial_tsp_sequence(&inst);
    let cfg = SearchConfig {
        single_depot_extension: true,
        ..SearchConfig::default()
    };
    let reports = [
        rts(&inst)?,
        vlsn(&inst, &x0, cfg.p)?,
        vlsn_ls(&inst, &x0, &cfg)?,
        vlsn_vnd(&inst, &x0, &cfg)?,
    ];
    for r in &reports {
        assert!(validate_tour(&r.tour, &inst).passed());
        println!(
            "{:<9} makespan {:>9.2}  iterations {:>3}  neighborhoods {:>4}  {:.3}s",
            r.algorithm, r.makespan, r.stats.iterations, r.stats.neighborhoods, r.wall_time_s
        );
    }
    let best = &reports[3].tour;
    println!("\nbest tour:");
    for e in &best.elements {
        match e {
            TourElement::Leg(l) if !l.is_trivial() => println!("  drive  RL {} -> RL {}", l.from_rl, l.to_rl),
            TourElement::Leg(_) => {}
            TourElement::Op(op) => println!(
                "  fly    RL {} -> {:?} -> RL {}",
                op.start_rl, op.destinations, op.end_rl
            ),
        }
    }
    Ok(())
}
