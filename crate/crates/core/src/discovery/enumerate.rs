use serde::{Deserialize, Serialize};

use super::DiscoveryConfig;

/// One point of the search space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub condition_attributes: Vec<String>,
    pub transformation_attributes: Vec<String>,
    pub k: usize,
}

/// Non-empty subsets of `pool` with at most `max` members, by size and then
/// lexicographically by position.
fn subsets(pool: &[String], max: usize) -> Vec<Vec<String>> {
    fn extend(pool: &[String], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<String>>) {
        if cur.len() == size {
            out.push(cur.iter().map(|&i| pool[i].clone()).collect());
            return;
        }
        for i in start..pool.len() {
            cur.push(i);
            extend(pool, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 1..=max.min(pool.len()) {
        extend(pool, size, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// Every (C, T, k) of a resolved config, in a fixed order: condition subsets
/// outermost, then transformation subsets, then k ascending.
pub fn enumerate_candidates(config: &DiscoveryConfig) -> Vec<Candidate> {
    let conds = subsets(&config.cond_pool, config.c);
    let trans = subsets(&config.tran_pool, config.t);
    let mut out = Vec::with_capacity(conds.len() * trans.len() * config.k_max);
    for c in &conds {
        for t in &trans {
            for k in 1..=config.k_max {
                out.push(Candidate {
                    condition_attributes: c.clone(),
                    transformation_attributes: t.clone(),
                    k,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn subset_order() {
        let s = subsets(&names(&["edu", "exp", "gen"]), 3);
        let flat: Vec<String> = s.iter().map(|v| v.join("+")).collect();
        assert_eq!(
            flat,
            ["edu", "exp", "gen", "edu+exp", "edu+gen", "exp+gen", "edu+exp+gen"]
        );
        assert_eq!(subsets(&names(&["bonus", "salary"]), 2).len(), 3);
    }

    #[test]
    fn full_grid() {
        let cfg = DiscoveryConfig::new("bonus")
            .with_pools(["edu", "exp", "gen"], ["bonus", "salary"])
            .with_limits(3, 2);
        let all = enumerate_candidates(&cfg);
        assert_eq!(all.len(), 84);
        assert_eq!(all[0].condition_attributes, ["edu"]);
        assert_eq!(all[0].k, 1);
        assert_eq!(all[3].k, 4);
        assert_eq!(all[4].transformation_attributes, ["salary"]);
    }

    proptest! {
        #[test]
        fn count_matches_formula(nc in 1usize..6, nt in 1usize..4, c in 1usize..6, t in 1usize..4, k in 1usize..5) {
            let cond: Vec<String> = (0..nc).map(|i| format!("c{i}")).collect();
            let tran: Vec<String> = (0..nt).map(|i| format!("t{i}")).collect();
            let cfg = DiscoveryConfig::new("t0").with_pools(cond, tran).with_limits(c.min(nc), t.min(nt)).with_k_max(k);
            let all = enumerate_candidates(&cfg);
            prop_assert_eq!(all.len() as u128, cfg.candidate_count());
            let mut dedup = all.clone();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), all.len());
        }
    }
}
