//! Prints the displacement patterns of the stage graph and their successor
//! lists for a given p.
//!
//! cargo run --example lookup_table -- [p]

use drpe::meta_graph::TransitionLookup;

fn main() -> drpe::Result<()> {
    let p: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let lookup = TransitionLookup::new(p)?;
    println!("p = {p}: {} patterns", lookup.patterns().len());
    for (i, pat) in lookup.patterns().iter().enumerate() {
        let succ: Vec<String> = (1..=3)
            .map(|h| {
                let ids: Vec<String> = lookup
                    .successors(i, h)
                    .iter()
                    .map(|b| (b + 1).to_string())
                    .collect();
                format!("h={h}: {}", ids.join(","))
            })
            .collect();
        println!("{:>3} {:<24} {}", i + 1, pat.to_string(), succ.join("  "));
    }
    Ok(())
}
