#![allow(clippy::needless_range_loop)]

use super::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering1D {
    pub k: usize,
    pub labels: Vec<usize>,
    /// Cluster means, ascending.
    pub centroids: Vec<f64>,
    pub sse: f64,
}

/// Globally optimal 1-D k-means.
///
/// Dynamic programming over the sorted distinct values (weighted by
/// multiplicity), with the divide-and-conquer speedup that the monotone optimal
/// split of 1-D k-means allows. Ties prefer the smallest split index, so the
/// result is fully deterministic.
pub fn kmeans_1d(points: &[f64], k: usize) -> Result<Clustering1D, StatsError> {
    if k == 0 {
        return Err(StatsError::ZeroClusters);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(StatsError::DimensionMismatch("non-finite point".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].total_cmp(&points[b]).then(a.cmp(&b)));

    let mut values: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut slot = vec![0usize; points.len()];
    for &i in &order {
        if values.last() != Some(&points[i]) {
            values.push(points[i]);
            weights.push(0.0);
        }
        *weights.last_mut().unwrap() += 1.0;
        slot[i] = values.len() - 1;
    }
    let m = values.len();
    if k > m {
        return Err(StatsError::KTooLarge { k, distinct: m });
    }

    // center to keep the prefix sums well conditioned
    let total_w: f64 = weights.iter().sum();
    let shift = values.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() / total_w;
    let mut pw = vec![0.0; m + 1];
    let mut ps = vec![0.0; m + 1];
    let mut pq = vec![0.0; m + 1];
    for i in 0..m {
        let x = values[i] - shift;
        pw[i + 1] = pw[i] + weights[i];
        ps[i + 1] = ps[i] + weights[i] * x;
        pq[i + 1] = pq[i] + weights[i] * x * x;
    }
    let cost = |i: usize, j: usize| -> f64 {
        let w = pw[j] - pw[i];
        let s = ps[j] - ps[i];
        (pq[j] - pq[i] - s * s / w).max(0.0)
    };

    // dp[c][j]: best cost of the first j distinct values in c clusters
    let mut dp = vec![vec![f64::INFINITY; m + 1]; k + 1];
    let mut split = vec![vec![0usize; m + 1]; k + 1];
    dp[0][0] = 0.0;
    for j in 1..=m {
        dp[1][j] = cost(0, j);
    }
    for c in 2..=k {
        let (prev, rest) = dp.split_at_mut(c);
        fill_layer(&prev[c - 1], &mut rest[0], &mut split[c], c, c, m, c - 1, m - 1, &cost);
    }

    let mut bounds = vec![0usize; k + 1];
    bounds[k] = m;
    let mut j = m;
    for c in (2..=k).rev() {
        j = split[c][j];
        bounds[c - 1] = j;
    }
    let mut distinct_label = vec![0usize; m];
    let mut centroids = Vec::with_capacity(k);
    for c in 0..k {
        let (lo, hi) = (bounds[c], bounds[c + 1]);
        for l in &mut distinct_label[lo..hi] {
            *l = c;
        }
        let w: f64 = weights[lo..hi].iter().sum();
        let s: f64 = (lo..hi).map(|i| weights[i] * values[i]).sum();
        centroids.push(s / w);
    }
    let labels: Vec<usize> = slot.iter().map(|&s| distinct_label[s]).collect();
    let sse = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| (p - centroids[l]).powi(2))
        .sum();
    Ok(Clustering1D {
        k,
        labels,
        centroids,
        sse,
    })
}

#[allow(clippy::too_many_arguments)]
fn fill_layer(
    prev: &[f64],
    cur: &mut [f64],
    split: &mut [usize],
    c: usize,
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
    cost: &impl Fn(usize, usize) -> f64,
) {
    if lo > hi {
        return;
    }
    let mid = (lo + hi) / 2;
    let mut best = f64::INFINITY;
    let mut best_i = opt_lo;
    for i in opt_lo..=opt_hi.min(mid - 1) {
        if i < c - 1 {
            continue;
        }
        let v = prev[i] + cost(i, mid);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    cur[mid] = best;
    split[mid] = best_i;
    if mid > lo {
        fill_layer(prev, cur, split, c, lo, mid - 1, opt_lo, best_i, cost);
    }
    fill_layer(prev, cur, split, c, mid + 1, hi, best_i, opt_hi, cost);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum SSE over every contiguous split of the sorted points.
    fn brute(points: &[f64], k: usize) -> f64 {
        let mut s = points.to_vec();
        s.sort_by(f64::total_cmp);
        fn go(s: &[f64], k: usize) -> f64 {
            if k == 1 {
                let m = s.iter().sum::<f64>() / s.len() as f64;
                return s.iter().map(|v| (v - m).powi(2)).sum();
            }
            (1..=s.len() - (k - 1))
                .map(|cut| go(&s[..cut], 1) + go(&s[cut..], k - 1))
                .fold(f64::INFINITY, f64::min)
        }
        go(&s, k)
    }

    #[test]
    fn two_obvious_groups() {
        let c = kmeans_1d(&[0.0, 1.0, 10.0, 11.0], 2).unwrap();
        assert_eq!(c.labels, [0, 0, 1, 1]);
        assert_eq!(c.centroids, [0.5, 10.5]);
        assert!((c.sse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_is_mean() {
        let pts = [3.0, 9.0, -3.0];
        let c = kmeans_1d(&pts, 1).unwrap();
        assert_eq!(c.centroids, [3.0]);
        assert!((c.sse - 72.0).abs() < 1e-12);
    }

    #[test]
    fn duplicates_count_as_one_distinct_value() {
        assert!(matches!(
            kmeans_1d(&[1.0, 1.0, 2.0], 3),
            Err(StatsError::KTooLarge { k: 3, distinct: 2 })
        ));
        let c = kmeans_1d(&[1.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(c.labels, [0, 0, 1]);
        assert_eq!(c.sse, 0.0);
        assert!(matches!(kmeans_1d(&[1.0], 0), Err(StatsError::ZeroClusters)));
    }

    #[test]
    fn labels_follow_input_order() {
        let c = kmeans_1d(&[10.0, 0.0, 11.0, 1.0], 2).unwrap();
        assert_eq!(c.labels, [1, 0, 1, 0]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(pts in prop::collection::vec(-100.0f64..100.0, 1..12), k in 1usize..5) {
            let distinct = {
                let mut s = pts.clone();
                s.sort_by(f64::total_cmp);
                s.dedup();
                s.len()
            };
            prop_assume!(k <= distinct);
            let c = kmeans_1d(&pts, k).unwrap();
            let oracle = brute(&pts, k);
            prop_assert!((c.sse - oracle).abs() <= 1e-9 * oracle.max(1.0), "{} vs {}", c.sse, oracle);
        }

        #[test]
        fn labels_are_contiguous(pts in prop::collection::vec(-1e6f64..1e6, 1..60), k in 1usize..6) {
            let mut uniq = pts.clone();
            uniq.sort_by(f64::total_cmp);
            uniq.dedup();
            prop_assume!(k <= uniq.len());
            let c = kmeans_1d(&pts, k).unwrap();
            let mut idx: Vec<usize> = (0..pts.len()).collect();
            idx.sort_by(|&a, &b| pts[a].total_cmp(&pts[b]));
            prop_assert!(idx.windows(2).all(|w| c.labels[w[0]] <= c.labels[w[1]]));
            prop_assert!(c.centroids.windows(2).all(|w| w[0] < w[1]));
            let sse: f64 = pts.iter().zip(&c.labels).map(|(p, &l)| (p - c.centroids[l]).powi(2)).sum();
            prop_assert_eq!(sse, c.sse);
        }
    }
}
