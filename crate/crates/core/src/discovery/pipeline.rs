use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    discover_partitions, discover_transformations, enumerate_candidates, Candidate, DiscoveryConfig, DiscoveryError,
};
use crate::frame::Frame;
use crate::summary::{ChangeSummary, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCandidate {
    pub candidate: Candidate,
    pub code: String,
    pub message: String,
}

/// Output of a run: the best summaries, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSummaries {
    /// The resolved configuration the run used.
    pub config: DiscoveryConfig,
    pub entries: Vec<ChangeSummary>,
    /// Candidates enumerated, including skipped ones.
    pub evaluated: usize,
    pub skipped: Vec<SkippedCandidate>,
}

/// Discover, fit and score one (C, T, k) candidate.
pub fn evaluate_candidate(
    frame: &Frame,
    candidate: &Candidate,
    config: &DiscoveryConfig,
) -> Result<ChangeSummary, DiscoveryError> {
    let set = discover_partitions(
        frame,
        &candidate.condition_attributes,
        &candidate.transformation_attributes,
        candidate.k,
        &config.grid,
    )?;
    let fitted = discover_transformations(
        frame,
        &set.partitions,
        &candidate.transformation_attributes,
        &config.grid,
        &set.global_coefficients,
    )?;
    let rules = fitted.into_iter().map(|f| (f.condition, f.transformation)).collect();
    let provenance = Provenance {
        condition_attributes: candidate.condition_attributes.clone(),
        transformation_attributes: candidate.transformation_attributes.clone(),
        k: candidate.k,
        degenerate_split: set.degenerate,
    };
    Ok(ChangeSummary::build(
        frame.target(),
        rules,
        frame,
        provenance,
        &config.scoring(),
    )?)
}

fn rank_order(a: &(String, ChangeSummary), b: &(String, ChangeSummary)) -> Ordering {
    b.1.score
        .score
        .total_cmp(&a.1.score.score)
        .then(b.1.score.accuracy.total_cmp(&a.1.score.accuracy))
        .then(a.1.cts.len().cmp(&b.1.cts.len()))
        .then_with(|| a.0.cmp(&b.0))
}

/// Sort by score, then accuracy, then fewer CTs, then CT key; drop repeated CT
/// sets (keeping the earliest-enumerated) and keep the first `top_n`.
///
/// `summaries` must be in enumeration order.
pub fn rank_summaries(summaries: Vec<ChangeSummary>, top_n: usize) -> Vec<ChangeSummary> {
    let mut keyed: Vec<(String, ChangeSummary)> = summaries.into_iter().map(|s| (s.ct_key(), s)).collect();
    // stable, so equal keys stay in enumeration order
    keyed.sort_by(rank_order);
    let mut seen = BTreeSet::new();
    keyed
        .into_iter()
        .filter(|(key, _)| seen.insert(key.clone()))
        .take(top_n)
        .map(|(_, s)| s)
        .collect()
}

/// Run the whole search for a frame.
///
/// Candidates are evaluated in parallel; the result does not depend on the
/// thread count. Failing candidates are recorded and skipped.
pub fn run_pipeline(frame: &Frame, config: &DiscoveryConfig) -> Result<RankedSummaries, DiscoveryError> {
    let config = config.resolve(frame)?;
    let candidates = enumerate_candidates(&config);
    if candidates.is_empty() {
        return Err(DiscoveryError::NoCandidates("nothing to enumerate".into()));
    }
    let eval = || -> Vec<Result<ChangeSummary, DiscoveryError>> {
        candidates
            .par_iter()
            .map(|c| evaluate_candidate(frame, c, &config))
            .collect()
    };
    let results = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| DiscoveryError::InvalidConfig(format!("thread pool: {e}")))?
            .install(eval),
        None => eval(),
    };

    let mut summaries = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (candidate, result) in candidates.iter().zip(results) {
        match result {
            Ok(s) => summaries.push(s),
            Err(e) => {
                log::debug!(
                    "skipped C={:?} T={:?} k={}: {e}",
                    candidate.condition_attributes,
                    candidate.transformation_attributes,
                    candidate.k
                );
                skipped.push(SkippedCandidate {
                    candidate: candidate.clone(),
                    code: e.code().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    if !skipped.is_empty() {
        log::warn!("{} of {} candidates skipped", skipped.len(), candidates.len());
    }
    Ok(RankedSummaries {
        entries: rank_summaries(summaries, config.top_n),
        evaluated: candidates.len(),
        skipped,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{align, read_snapshot, LoadOptions};

    fn frame(target: &str) -> Frame {
        let o = LoadOptions::new("name");
        let a = read_snapshot(include_str!("../../data/employees_2016.csv").as_bytes(), &o).unwrap();
        let b = read_snapshot(include_str!("../../data/employees_2017.csv").as_bytes(), &o).unwrap();
        Frame::new(&align(&a, &b, "name").unwrap(), target).unwrap()
    }

    fn golden() -> DiscoveryConfig {
        DiscoveryConfig::new("bonus")
            .with_pools(["edu", "exp", "gen"], ["bonus_old", "salary"])
            .with_limits(2, 1)
    }

    #[test]
    fn golden_ranks_first() {
        let f = frame("bonus");
        let ranked = run_pipeline(&f, &golden()).unwrap();
        let top = &ranked.entries[0];
        assert_eq!(top.score.accuracy, 1.0);
        assert_eq!(top.cts.len(), 3);
        assert!((top.score.interpretability - 43.0 / 72.0).abs() < 1e-12);
        assert_eq!(ranked.evaluated, 6 * 2 * 4);
        assert!(ranked.entries.len() <= 10);
    }

    #[test]
    fn ranking_is_sorted_and_unique() {
        let f = frame("bonus");
        let ranked = run_pipeline(&f, &golden().with_top_n(100)).unwrap();
        let keys: BTreeSet<String> = ranked.entries.iter().map(|s| s.ct_key()).collect();
        assert_eq!(keys.len(), ranked.entries.len());
        for w in ranked.entries.windows(2) {
            assert!(w[0].score.score >= w[1].score.score);
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let f = frame("bonus");
        let one = run_pipeline(&f, &golden().with_threads(1)).unwrap();
        let four = run_pipeline(&f, &golden().with_threads(4)).unwrap();
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&four).unwrap()
        );
    }

    #[test]
    fn salary_change_is_none() {
        // salaries did not change between the snapshots
        let f = frame("salary");
        let cfg = DiscoveryConfig::new("salary").with_pools(["edu"], ["salary"]);
        let ranked = run_pipeline(&f, &cfg).unwrap();
        let top = &ranked.entries[0];
        assert_eq!(top.cts.len(), 1);
        assert!(top.cts[0].transformation.is_identity());
        assert_eq!(top.score.score, 1.0);
    }

    #[test]
    fn empty_condition_pool() {
        let f = frame("bonus");
        let err = run_pipeline(&f, &DiscoveryConfig::new("bonus")).unwrap_err();
        assert!(matches!(err, DiscoveryError::NoCandidates(_)));
    }
}
