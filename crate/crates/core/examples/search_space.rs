//! How the candidate count grows with the pool sizes and limits.

use chardiff::discovery::{enumerate_candidates, DiscoveryConfig};

fn main() {
    let cond = ["edu", "exp", "gen", "salary", "dept", "site"];
    let tran = ["bonus", "salary", "exp"];
    println!("k_max = 4\n{:>3} {:>3} {:>10}", "c", "t", "candidates");
    for c in 1..=3 {
        for t in 1..=2 {
            let config = DiscoveryConfig::new("bonus")
                .with_pools(cond, tran)
                .with_limits(c, t)
                .with_k_max(4);
            println!("{c:>3} {t:>3} {:>10}", config.candidate_count());
        }
    }
    let small = DiscoveryConfig::new("bonus")
        .with_pools(["edu", "exp"], ["bonus"])
        .with_limits(2, 1)
        .with_k_max(2);
    for cand in enumerate_candidates(&small) {
        println!(
            "C = {:?}, T = {:?}, k = {}",
            cand.condition_attributes, cand.transformation_attributes, cand.k
        );
    }
}
