//! Size of the permutation neighborhood for several n and p, with the
//! exponential lower bound and a listing of the smallest case.
//!
//! cargo run --example neighborhood_counts

use drpe::oracle::{count_bs_neighbors, enumerate_bs_neighbors, neighborhood_lower_bound};

fn main() -> drpe::Result<()> {
    println!("{:>3} {:>2} {:>14} {:>14}", "n", "p", "neighbors", "lower bound");
    for p in 2..=5 {
        for n in [5, 7, 9, 11, 16, 32] {
            println!(
                "{n:>3} {p:>2} {:>14} {:>14.3e}",
                count_bs_neighbors(n, p),
                neighborhood_lower_bound(n, p)
            );
        }
    }
    let x: Vec<usize> = (0..5).collect();
    println!("\nneighbors of 1 2 3 4 5 for p = 2:");
    for y in enumerate_bs_neighbors(&x, 2)? {
        let s: Vec<String> = y.iter().map(|v| (v + 1).to_string()).collect();
        println!("  {}", s.join(" "));
    }
    Ok(())
}
