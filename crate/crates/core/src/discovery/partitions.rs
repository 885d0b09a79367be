use std::collections::{BTreeMap, BTreeSet};

use super::{l1_tolerance, DiscoveryError};
use crate::frame::{Column, Frame};
use crate::stats::{kmeans_1d, ols_fit, snap, NormalityGrid, OlsFit, Role, StatsError};
use crate::summary::{Condition, Predicate};

/// Refinement rounds after the initial residual clustering.
const MAX_ROUNDS: usize = 10;
/// Minimum impurity decrease for a split to count.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub condition: Condition,
    /// Row indices in ascending order.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    /// Disjoint and exhaustive over the frame's rows.
    pub partitions: Vec<Partition>,
    /// The first tree produced fewer than `k` leaves.
    pub degenerate: bool,
    /// Coefficients of the global fit, aligned with the transformation attributes.
    pub global_coefficients: Vec<f64>,
}

/// Regressor columns for `attrs` (imputed source values).
pub(crate) fn design<'a>(frame: &'a Frame, attrs: &[String]) -> Result<Vec<&'a [f64]>, DiscoveryError> {
    attrs
        .iter()
        .map(|a| match frame.column(a) {
            Some(Column::Numeric(c)) => Ok(c.values.as_slice()),
            Some(Column::Categorical(_)) => Err(DiscoveryError::NonNumericRegressor(a.clone())),
            None => Err(DiscoveryError::UnknownAttribute(a.clone())),
        })
        .collect()
}

pub(crate) fn subset(col: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&r| col[r]).collect()
}

/// L1 of the least-squares fit restricted to `rows`.
pub(crate) fn fit_l1(x: &[&[f64]], y: &[f64], rows: &[usize]) -> Result<f64, StatsError> {
    let xs: Vec<Vec<f64>> = x.iter().map(|c| subset(c, rows)).collect();
    let xr: Vec<&[f64]> = xs.iter().map(|c| c.as_slice()).collect();
    Ok(ols_fit(&xr, &subset(y, rows), 0.0)?.l1())
}

/// Split the rows into regions with distinct linear behaviour, expressed as
/// conditions over `cond_attrs`.
///
/// A global least-squares fit of the new target on the SOURCE values of
/// `tran_attrs` yields signed residuals, which exact 1-D k-means groups into `k`
/// clusters. A Gini tree of depth at most `|cond_attrs|` turns the clusters into
/// conditions. Sibling leaves that one linear model fits as well are merged,
/// and rows are then moved to the leaf whose model fits them best and the tree
/// regrown, for a few rounds; the lowest-error tree wins. Returned row sets are
/// those routed by the conditions, so they are disjoint and exhaustive.
pub fn discover_partitions(
    frame: &Frame,
    cond_attrs: &[String],
    tran_attrs: &[String],
    k: usize,
    grid: &NormalityGrid,
) -> Result<PartitionSet, DiscoveryError> {
    if cond_attrs.is_empty() || tran_attrs.is_empty() {
        return Err(DiscoveryError::InvalidConfig(
            "condition and transformation attribute sets must be non-empty".into(),
        ));
    }
    let x = design(frame, tran_attrs)?;
    let y = frame.new_values();
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let global = ols_fit(&x, y, 0.0)?;
    let q = 1e-9 * scale;
    let residuals: Vec<f64> = global.residuals.iter().map(|r| (r / q).round() * q).collect();
    // fails early when there are fewer distinct residuals than k
    kmeans_1d(&residuals, k)?;

    let search = Search {
        x,
        y,
        n: frame.len(),
        scale,
        residuals,
        grower: Grower::new(frame, cond_attrs, grid)?,
    };
    let outcome = search.run(k)?;
    let mut partitions = Vec::with_capacity(outcome.leaves.len());
    for leaf in outcome.leaves {
        partitions.push(Partition {
            condition: Condition::from_path(&leaf.path)?,
            rows: leaf.rows,
        });
    }
    Ok(PartitionSet {
        partitions,
        degenerate: outcome.first_tree_leaves < k,
        global_coefficients: global.coefficients,
    })
}

struct Search<'a> {
    x: Vec<&'a [f64]>,
    y: &'a [f64],
    n: usize,
    scale: f64,
    residuals: Vec<f64>,
    grower: Grower<'a>,
}

struct Outcome {
    l1: f64,
    leaves: Vec<Leaf>,
    /// Leaves of the very first tree, before pruning.
    first_tree_leaves: usize,
}

impl Search<'_> {
    fn improves(&self, l1: f64, leaves: usize, best: &Outcome) -> bool {
        let tol = l1_tolerance(self.scale, self.n);
        l1 < best.l1 - tol || ((l1 - best.l1).abs() <= tol && leaves < best.leaves.len())
    }

    /// Refinement from the global residual clusters. When that is not exact,
    /// a second start splits the worst leaf of the `k − 1` solution, and the
    /// better of the two wins.
    fn run(&self, k: usize) -> Result<Outcome, StatsError> {
        let labels = kmeans_1d(&self.residuals, k)?.labels;
        let mut best = self.refine(labels, k)?;
        if k > 1 && best.l1 > l1_tolerance(self.scale, self.n) {
            let coarse = self.run(k - 1)?;
            let models = self.models(&coarse.leaves)?;
            if let Some(labels) = split_worst(&coarse.leaves, &models, usize::MAX, self.scale) {
                let mut other = self.refine(labels, k)?;
                if self.improves(other.l1, other.leaves.len(), &best) {
                    other.first_tree_leaves = best.first_tree_leaves;
                    best = other;
                }
            }
        }
        Ok(best)
    }

    fn models(&self, leaves: &[Leaf]) -> Result<Vec<OlsFit>, StatsError> {
        leaves
            .iter()
            .map(|leaf| {
                let xs: Vec<Vec<f64>> = self.x.iter().map(|c| subset(c, &leaf.rows)).collect();
                let xr: Vec<&[f64]> = xs.iter().map(|c| c.as_slice()).collect();
                ols_fit(&xr, &subset(self.y, &leaf.rows), 0.0)
            })
            .collect()
    }

    fn refine(&self, mut labels: Vec<usize>, k: usize) -> Result<Outcome, StatsError> {
        let (x, y, n) = (&self.x, self.y, self.n);
        let all: Vec<usize> = (0..n).collect();
        let row_tol = l1_tolerance(self.scale, 1);
        let mut first_tree_leaves = 0;
        let mut best: Option<Outcome> = None;
        let mut seen: BTreeSet<Vec<Vec<usize>>> = BTreeSet::new();
        for round in 0..MAX_ROUNDS {
            let mut root = self.grower.grow(all.clone(), &labels, Vec::new(), 0);
            if round == 0 {
                first_tree_leaves = root.leaf_count();
            }
            prune(&mut root, x, y, self.scale)?;
            let leaves = root.into_leaves();
            let models = self.models(&leaves)?;
            let l1: f64 = models.iter().map(OlsFit::l1).sum();
            if best.as_ref().is_none_or(|b| self.improves(l1, leaves.len(), b)) {
                best = Some(Outcome {
                    l1,
                    leaves: leaves.clone(),
                    first_tree_leaves,
                });
            }
            let mut key: Vec<Vec<usize>> = leaves.iter().map(|l| l.rows.clone()).collect();
            key.sort();
            if !seen.insert(key) {
                // fixed point: split the worst leaf by its own residuals, if allowed
                match split_worst(&leaves, &models, k, self.scale) {
                    Some(l) => {
                        labels = l;
                        continue;
                    }
                    None => break,
                }
            }

            // move each row to the leaf model that fits it best
            let mut own = vec![0usize; n];
            for (i, leaf) in leaves.iter().enumerate() {
                for &r in &leaf.rows {
                    own[r] = i;
                }
            }
            let mut row_buf = vec![0.0; x.len()];
            labels = (0..n)
                .map(|r| {
                    for (j, c) in x.iter().enumerate() {
                        row_buf[j] = c[r];
                    }
                    let errs: Vec<f64> = models.iter().map(|m| (y[r] - m.predict(&row_buf)).abs()).collect();
                    let (arg, min) =
                        errs.iter()
                            .enumerate()
                            .fold((0, f64::INFINITY), |acc, (i, e)| if *e < acc.1 { (i, *e) } else { acc });
                    if errs[own[r]] <= min + row_tol {
                        own[r]
                    } else {
                        arg
                    }
                })
                .collect();
        }
        let mut best = best.expect("at least one round");
        best.first_tree_leaves = first_tree_leaves;
        Ok(best)
    }
}

/// Labels that keep every leaf except the worst-fitting one, which is cut by
/// the sign of its local residuals: the least-squares line of a leaf mixing
/// two linear rules runs between them. `None` when the tree already has `k`
/// leaves or every leaf fits exactly.
fn split_worst(leaves: &[Leaf], models: &[OlsFit], k: usize, scale: f64) -> Option<Vec<usize>> {
    if leaves.len() >= k {
        return None;
    }
    let (worst, fit) = models
        .iter()
        .enumerate()
        .filter(|(i, m)| m.l1() > l1_tolerance(scale, leaves[*i].rows.len()))
        .max_by(|a, b| a.1.l1().total_cmp(&b.1.l1()).then(b.0.cmp(&a.0)))?;
    let q = 1e-9 * scale;
    let above: Vec<bool> = fit.residuals.iter().map(|r| *r > q).collect();
    if above.iter().all(|a| *a) || !above.iter().any(|a| *a) {
        return None;
    }
    let n = leaves.iter().map(|l| l.rows.len()).sum();
    let mut labels = vec![0; n];
    for (i, leaf) in leaves.iter().enumerate() {
        for (j, &r) in leaf.rows.iter().enumerate() {
            labels[r] = if i == worst && above[j] { leaves.len() } else { i };
        }
    }
    Some(labels)
}

#[derive(Debug, Clone)]
struct Leaf {
    path: Vec<Predicate>,
    rows: Vec<usize>,
}

#[derive(Debug)]
struct Node {
    path: Vec<Predicate>,
    rows: Vec<usize>,
    children: Vec<Node>,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(Node::leaf_count).sum()
        }
    }

    fn into_leaves(self) -> Vec<Leaf> {
        if self.children.is_empty() {
            let mut rows = self.rows;
            rows.sort_unstable();
            return vec![Leaf { path: self.path, rows }];
        }
        self.children.into_iter().flat_map(Node::into_leaves).collect()
    }
}

/// Bottom-up merge of sibling leaves that one linear model fits as well.
fn prune(node: &mut Node, x: &[&[f64]], y: &[f64], scale: f64) -> Result<(), StatsError> {
    if node.is_leaf() {
        return Ok(());
    }
    for child in &mut node.children {
        prune(child, x, y, scale)?;
    }
    if node.children.iter().all(Node::is_leaf) {
        let mut split = 0.0;
        for child in &node.children {
            split += fit_l1(x, y, &child.rows)?;
        }
        let merged = fit_l1(x, y, &node.rows)?;
        if merged <= split + l1_tolerance(scale, node.rows.len()) {
            node.children.clear();
        }
    }
    Ok(())
}

enum CondColumn<'a> {
    Categorical(&'a [String]),
    /// `None` when the attribute has nulls and so cannot be thresholded.
    Numeric(Option<&'a [f64]>),
}

struct Grower<'a> {
    attrs: Vec<(String, CondColumn<'a>)>,
    depth_limit: usize,
    grid: &'a NormalityGrid,
}

struct Split {
    gain: f64,
    children: Vec<(Predicate, Vec<usize>)>,
}

/// `n · gini` of the labels of `rows`.
fn weighted_gini(rows: &[usize], labels: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for &r in rows {
        *counts.entry(labels[r]).or_default() += 1.0;
    }
    let n = rows.len() as f64;
    n - counts.values().map(|c| c * c).sum::<f64>() / n
}

fn gini_from_counts(counts: &[f64], n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    n - counts.iter().map(|c| c * c).sum::<f64>() / n
}

impl<'a> Grower<'a> {
    fn new(frame: &'a Frame, cond_attrs: &[String], grid: &'a NormalityGrid) -> Result<Self, DiscoveryError> {
        let mut names: Vec<&String> = cond_attrs.iter().collect();
        names.sort();
        names.dedup();
        let mut attrs = Vec::with_capacity(names.len());
        for name in names {
            let col = match frame.column(name) {
                Some(Column::Categorical(v)) => CondColumn::Categorical(v),
                Some(Column::Numeric(c)) => CondColumn::Numeric((c.null_count == 0).then_some(c.values.as_slice())),
                None => return Err(DiscoveryError::UnknownAttribute(name.clone())),
            };
            attrs.push((name.clone(), col));
        }
        Ok(Grower {
            depth_limit: attrs.len(),
            attrs,
            grid,
        })
    }

    fn grow(&self, rows: Vec<usize>, labels: &[usize], path: Vec<Predicate>, depth: usize) -> Node {
        let leaf = |rows, path| Node {
            path,
            rows,
            children: Vec::new(),
        };
        let first = labels[rows[0]];
        if depth >= self.depth_limit || rows.iter().all(|&r| labels[r] == first) {
            return leaf(rows, path);
        }
        let base = weighted_gini(&rows, labels);
        let mut best: Option<Split> = None;
        for (name, col) in &self.attrs {
            let cand = match col {
                CondColumn::Categorical(values) => {
                    let used = path
                        .iter()
                        .any(|p| matches!(p, Predicate::Equals { attribute, .. } if attribute == name));
                    if used {
                        continue;
                    }
                    self.categorical_split(name, values, &rows, labels, base)
                }
                CondColumn::Numeric(Some(values)) => self.numeric_split(name, values, &rows, labels, base),
                CondColumn::Numeric(None) => None,
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.gain > b.gain + MIN_GAIN) {
                    best = Some(c);
                }
            }
        }
        match best {
            Some(split) if split.gain > MIN_GAIN => {
                let children = split
                    .children
                    .into_iter()
                    .map(|(pred, child_rows)| {
                        let mut p = path.clone();
                        p.push(pred);
                        self.grow(child_rows, labels, p, depth + 1)
                    })
                    .collect();
                Node { path, rows, children }
            }
            _ => leaf(rows, path),
        }
    }

    fn categorical_split(
        &self,
        name: &str,
        values: &[String],
        rows: &[usize],
        labels: &[usize],
        base: f64,
    ) -> Option<Split> {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &r in rows {
            groups.entry(values[r].as_str()).or_default().push(r);
        }
        if groups.len() < 2 {
            return None;
        }
        let impurity: f64 = groups.values().map(|g| weighted_gini(g, labels)).sum();
        Some(Split {
            gain: base - impurity,
            children: groups
                .into_iter()
                .map(|(v, g)| (Predicate::equals(name, v), g))
                .collect(),
        })
    }

    /// Best binary threshold split. Thresholds sit at midpoints between
    /// adjacent distinct values, moved onto the threshold grid when that keeps
    /// the same rows on each side.
    fn numeric_split(&self, name: &str, values: &[f64], rows: &[usize], labels: &[usize], base: f64) -> Option<Split> {
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let n_labels = rows.iter().map(|&r| labels[r]).max().unwrap_or(0) + 1;
        let mut right = vec![0.0; n_labels];
        for &r in rows {
            right[labels[r]] += 1.0;
        }
        let mut left = vec![0.0; n_labels];
        let total = rows.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for i in 0..sorted.len() - 1 {
            let l = labels[sorted[i]];
            left[l] += 1.0;
            right[l] -= 1.0;
            let (lo, hi) = (values[sorted[i]], values[sorted[i + 1]]);
            if lo == hi {
                continue;
            }
            let nl = (i + 1) as f64;
            let impurity = gini_from_counts(&left, nl) + gini_from_counts(&right, total - nl);
            let gain = base - impurity;
            if best.is_none_or(|(g, _, _)| gain > g + MIN_GAIN) {
                let mid = lo + (hi - lo) / 2.0;
                let snapped = snap(mid, Role::Threshold, self.grid).snapped;
                let t = if lo < snapped && snapped <= hi { snapped } else { mid };
                best = Some((gain, i + 1, t));
            }
        }
        let (gain, cut, t) = best?;
        let mut lower = sorted[..cut].to_vec();
        let mut upper = sorted[cut..].to_vec();
        lower.sort_unstable();
        upper.sort_unstable();
        Some(Split {
            gain,
            children: vec![
                (Predicate::less_than(name, t), lower),
                (Predicate::at_least(name, t), upper),
            ],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{align, read_snapshot, LoadOptions};

    fn frame() -> Frame {
        let o = LoadOptions::new("name");
        let a = read_snapshot(include_str!("../../data/employees_2016.csv").as_bytes(), &o).unwrap();
        let b = read_snapshot(include_str!("../../data/employees_2017.csv").as_bytes(), &o).unwrap();
        Frame::new(&align(&a, &b, "name").unwrap(), "bonus").unwrap()
    }

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn names(f: &Frame, rows: &[usize]) -> Vec<String> {
        let mut v: Vec<String> = rows.iter().map(|&r| f.keys()[r].clone()).collect();
        v.sort();
        v
    }

    fn assert_exhaustive(set: &PartitionSet, n: usize) {
        let mut seen = vec![0; n];
        for p in &set.partitions {
            for &r in &p.rows {
                seen[r] += 1;
            }
        }
        assert!(seen.iter().all(|c| *c == 1), "{seen:?}");
    }

    #[test]
    fn recovers_rule_groups() {
        let f = frame();
        let set = discover_partitions(&f, &s(&["edu", "exp"]), &s(&["bonus"]), 4, &NormalityGrid::default()).unwrap();
        assert_exhaustive(&set, f.len());
        let mut got: Vec<(String, Vec<String>)> = set
            .partitions
            .iter()
            .map(|p| (p.condition.to_string(), names(&f, &p.rows)))
            .collect();
        got.sort();
        assert_eq!(
            got,
            [
                ("edu = BS".to_string(), s(&["Cathy", "James"])),
                ("edu = MS ∧ exp < 3".to_string(), s(&["Allen"])),
                ("edu = MS ∧ exp ≥ 3".to_string(), s(&["Amber", "Lucy", "Tom"])),
                ("edu = PhD".to_string(), s(&["Anne", "Bob", "Frank"])),
            ]
        );
        assert!(!set.degenerate);
    }

    #[test]
    fn single_cluster_is_everything() {
        let f = frame();
        let set = discover_partitions(&f, &s(&["edu"]), &s(&["bonus"]), 1, &NormalityGrid::default()).unwrap();
        assert_eq!(set.partitions.len(), 1);
        assert!(set.partitions[0].condition.is_empty());
        assert_eq!(set.partitions[0].rows, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn binary_attribute_is_degenerate_for_large_k() {
        let f = frame();
        let set = discover_partitions(&f, &s(&["gen"]), &s(&["bonus"]), 4, &NormalityGrid::default()).unwrap();
        assert!(set.degenerate);
        assert!(set.partitions.len() <= 2);
        assert_exhaustive(&set, f.len());
    }

    #[test]
    fn too_many_clusters() {
        let f = frame();
        let err = discover_partitions(&f, &s(&["edu"]), &s(&["bonus"]), 20, &NormalityGrid::default()).unwrap_err();
        assert!(matches!(err, DiscoveryError::Stats(StatsError::KTooLarge { .. })));
    }

    #[test]
    fn categorical_regressor_rejected() {
        let f = frame();
        let err = discover_partitions(&f, &s(&["edu"]), &s(&["gen"]), 2, &NormalityGrid::default()).unwrap_err();
        assert!(matches!(err, DiscoveryError::NonNumericRegressor(_)));
    }
}
