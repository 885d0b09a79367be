//! Seeded generator of snapshot pairs with a known ("planted") change summary.
//!
//! Each dataset is an employee-like table `id, dept, site, tenure, age, pay`
//! where `pay` was updated by up to three on-grid affine rules over
//! partitions of depth at most two. Rows outside every rule are unchanged.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

use crate::discovery::DiscoveryConfig;
use crate::snapshot::{align, read_snapshot, AlignedPair, LoadOptions, SnapshotError};
use crate::summary::{Condition, LinearTransformation, Predicate};

pub const KEY: &str = "id";
pub const TARGET: &str = "pay";
pub const CONDITION_ATTRIBUTES: [&str; 4] = ["age", "dept", "site", "tenure"];
/// Every planted partition has at least this many rows.
pub const MIN_PARTITION_ROWS: usize = 8;

const DEPTS: [&str; 4] = ["eng", "hr", "ops", "sales"];
const SITES: [&str; 2] = ["east", "west"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedRule {
    pub condition: Condition,
    pub transformation: LinearTransformation,
    /// Row indices in key order.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PlantedDataset {
    pub seed: u64,
    pub source_csv: String,
    pub target_csv: String,
    /// Rules that change `pay`; identity rules are left out.
    pub rules: Vec<PlantedRule>,
}

#[derive(Debug, Clone)]
struct Row {
    dept: &'static str,
    site: &'static str,
    tenure: i64,
    age: i64,
    pay: i64,
}

impl Row {
    fn holds(&self, p: &Predicate) -> bool {
        let num = |a: &str| if a == "tenure" { self.tenure } else { self.age } as f64;
        match p {
            Predicate::Equals { attribute, value } => {
                let v = if attribute == "dept" { self.dept } else { self.site };
                v == value
            }
            Predicate::LessThan { attribute, threshold } => num(attribute) < *threshold,
            Predicate::AtLeast { attribute, threshold } => num(attribute) >= *threshold,
        }
    }
}

fn random_predicate(rng: &mut ChaCha8Rng, attr: &str, rows: &[Row]) -> Predicate {
    match attr {
        "dept" | "site" => {
            let mut seen: Vec<&str> = rows
                .iter()
                .map(|r| if attr == "dept" { r.dept } else { r.site })
                .collect();
            seen.sort_unstable();
            seen.dedup();
            Predicate::equals(attr, *seen.choose(rng).expect("non-empty table"))
        }
        "tenure" => Predicate::less_than(attr, rng.random_range(3..=9) as f64),
        _ => Predicate::less_than(attr, rng.random_range(30..=50) as f64),
    }
}

/// The complementary predicate, when one exists in the predicate language.
fn complement(p: &Predicate, rows: &[Row]) -> Option<Predicate> {
    match p {
        Predicate::LessThan { attribute, threshold } => Some(Predicate::at_least(attribute.clone(), *threshold)),
        Predicate::AtLeast { attribute, threshold } => Some(Predicate::less_than(attribute.clone(), *threshold)),
        Predicate::Equals { attribute, value } => {
            let mut others: Vec<&str> = rows
                .iter()
                .map(|r| if attribute == "dept" { r.dept } else { r.site })
                .filter(|v| v != value)
                .collect();
            others.sort_unstable();
            others.dedup();
            (others.len() == 1).then(|| Predicate::equals(attribute.clone(), others[0]))
        }
    }
}

impl PlantedDataset {
    /// Deterministic in `seed`.
    pub fn generate(seed: u64) -> PlantedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            if let Some(ds) = Self::attempt(&mut rng, seed) {
                return ds;
            }
        }
    }

    fn attempt(rng: &mut ChaCha8Rng, seed: u64) -> Option<PlantedDataset> {
        let n = rng.random_range(30..=60);
        let rows: Vec<Row> = (0..n)
            .map(|_| Row {
                dept: DEPTS.choose(rng).unwrap(),
                site: SITES.choose(rng).unwrap(),
                tenure: rng.random_range(0..=12),
                age: rng.random_range(20..=60),
                pay: rng.random_range(100..=900) * 10,
            })
            .collect();

        let first = *CONDITION_ATTRIBUTES.choose(rng).unwrap();
        let p = random_predicate(rng, first, &rows);
        let leaves: Vec<Vec<Predicate>> = match rng.random_range(1..=3) {
            1 => vec![vec![]],
            2 => std::iter::once(vec![p.clone()])
                .chain(complement(&p, &rows).map(|c| vec![c]))
                .collect(),
            _ => {
                let others: Vec<&str> = CONDITION_ATTRIBUTES.iter().copied().filter(|a| *a != first).collect();
                let second = *others.choose(rng).unwrap();
                let q = random_predicate(rng, second, &rows);
                let mut out = vec![vec![p.clone(), q.clone()]];
                if let Some(cq) = complement(&q, &rows) {
                    out.push(vec![p.clone(), cq]);
                }
                if let Some(cp) = complement(&p, &rows) {
                    out.push(vec![cp]);
                }
                out
            }
        };
        let row_sets: Vec<Vec<usize>> = leaves
            .iter()
            .map(|path| (0..n).filter(|&r| path.iter().all(|p| rows[r].holds(p))).collect())
            .collect();
        if row_sets.iter().any(|s| s.len() < MIN_PARTITION_ROWS) {
            return None;
        }

        // (rate in hundredths, intercept); None is "unchanged"
        let mut planted: Vec<Option<(i64, i64)>> = Vec::new();
        for _ in &leaves {
            loop {
                let t = if rng.random_bool(0.25) {
                    None
                } else {
                    Some((rng.random_range(101..=120), rng.random_range(0..=40) * 50))
                };
                if !planted.contains(&t) {
                    planted.push(t);
                    break;
                }
            }
        }
        if leaves.len() > 1 && planted.iter().all(Option::is_none) {
            return None;
        }

        let mut new_pay: Vec<Decimal> = rows.iter().map(|r| Decimal::from(r.pay)).collect();
        let mut rules = Vec::new();
        for ((path, set), t) in leaves.iter().zip(&row_sets).zip(&planted) {
            let Some((rate, intercept)) = *t else { continue };
            let rate_dec = Decimal::new(rate, 2);
            for &r in set {
                new_pay[r] = rate_dec * Decimal::from(rows[r].pay) + Decimal::from(intercept);
            }
            rules.push(PlantedRule {
                condition: Condition::new(path.clone()).expect("planted paths are consistent"),
                transformation: LinearTransformation::new(
                    BTreeMap::from([(TARGET.to_string(), rate as f64 / 100.0)]),
                    intercept as f64,
                    TARGET,
                ),
                rows: set.clone(),
            });
        }

        let header = format!("{KEY},dept,site,tenure,age,{TARGET}\n");
        let (mut source_csv, mut target_csv) = (header.clone(), header);
        for (i, r) in rows.iter().enumerate() {
            let prefix = format!("{},{},{},{},{}", i + 1, r.dept, r.site, r.tenure, r.age);
            let _ = writeln!(source_csv, "{prefix},{}", r.pay);
            let _ = writeln!(target_csv, "{prefix},{}", new_pay[i].normalize());
        }
        Some(PlantedDataset {
            seed,
            source_csv,
            target_csv,
            rules,
        })
    }

    pub fn pair(&self) -> Result<AlignedPair, SnapshotError> {
        let opts = LoadOptions::new(KEY);
        let source = read_snapshot(self.source_csv.as_bytes(), &opts)?;
        let target = read_snapshot(self.target_csv.as_bytes(), &opts)?;
        align(&source, &target, KEY)
    }

    /// Search settings that can express every planted summary.
    pub fn config(&self) -> DiscoveryConfig {
        DiscoveryConfig::new(TARGET)
            .with_pools(CONDITION_ATTRIBUTES, [TARGET])
            .with_limits(2, 1)
            .with_k_max(4)
            .with_seed(self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Frame;
    use crate::summary::assign_rows;

    #[test]
    fn deterministic() {
        let a = PlantedDataset::generate(7);
        let b = PlantedDataset::generate(7);
        assert_eq!(a.source_csv, b.source_csv);
        assert_eq!(a.target_csv, b.target_csv);
        assert_ne!(a.source_csv, PlantedDataset::generate(8).source_csv);
    }

    #[test]
    fn rules_route_their_rows() {
        for seed in 0..30 {
            let ds = PlantedDataset::generate(seed);
            let frame = Frame::new(&ds.pair().unwrap(), TARGET).unwrap();
            let conditions: Vec<&Condition> = ds.rules.iter().map(|r| &r.condition).collect();
            let assignment = assign_rows(&conditions, &frame).unwrap();
            for (i, rule) in ds.rules.iter().enumerate() {
                assert!(rule.rows.len() >= MIN_PARTITION_ROWS);
                let routed: Vec<usize> = (0..frame.len()).filter(|r| assignment[*r] == Some(i)).collect();
                assert_eq!(routed, rule.rows, "seed {seed}");
            }
            // unmatched rows did not change
            for r in (0..frame.len()).filter(|r| assignment[*r].is_none()) {
                assert!(frame.delta().delta[r].is_zero());
            }
        }
    }
}
