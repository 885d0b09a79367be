use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ChangeSummary, Condition, LinearTransformation, Predicate, SummaryError};
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        predicate: Predicate,
        yes: Box<TreeNode>,
        no: Box<TreeNode>,
    },
    Leaf {
        /// Index of the summary CT this leaf applies, `None` for the default.
        ct: Option<usize>,
        transformation: LinearTransformation,
    },
}

/// Binary decision tree whose leaves are transformations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModelTree {
    pub target: String,
    pub root: TreeNode,
    conditions: Vec<Condition>,
}

/// One rule recovered from a tree. `condition` is `None` for the default rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatRule {
    pub condition: Option<Condition>,
    pub transformation: LinearTransformation,
}

/// What is known about one attribute along a path.
#[derive(Debug, Clone, Default)]
struct Bounds {
    eq: Option<String>,
    neq: BTreeSet<String>,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Implied,
    Contradicted,
    Open,
}

type Region = BTreeMap<String, Bounds>;

fn status(p: &Predicate, region: &Region) -> Status {
    let Some(b) = region.get(p.attribute()) else {
        return Status::Open;
    };
    match p {
        Predicate::Equals { value, .. } => match &b.eq {
            Some(v) if v == value => Status::Implied,
            Some(_) => Status::Contradicted,
            None if b.neq.contains(value) => Status::Contradicted,
            None => Status::Open,
        },
        Predicate::LessThan { threshold, .. } => {
            if b.upper.is_some_and(|u| u <= *threshold) {
                Status::Implied
            } else if b.lower.is_some_and(|l| l >= *threshold) {
                Status::Contradicted
            } else {
                Status::Open
            }
        }
        Predicate::AtLeast { threshold, .. } => {
            if b.lower.is_some_and(|l| l >= *threshold) {
                Status::Implied
            } else if b.upper.is_some_and(|u| u <= *threshold) {
                Status::Contradicted
            } else {
                Status::Open
            }
        }
    }
}

fn restrict(region: &Region, p: &Predicate, holds: bool) -> Region {
    let mut r = region.clone();
    let b = r.entry(p.attribute().to_string()).or_default();
    match (p, holds) {
        (Predicate::Equals { value, .. }, true) => b.eq = Some(value.clone()),
        (Predicate::Equals { value, .. }, false) => {
            b.neq.insert(value.clone());
        }
        (Predicate::LessThan { threshold, .. }, true) | (Predicate::AtLeast { threshold, .. }, false) => {
            b.upper = Some(b.upper.map_or(*threshold, |u| u.min(*threshold)));
        }
        (Predicate::LessThan { threshold, .. }, false) | (Predicate::AtLeast { threshold, .. }, true) => {
            b.lower = Some(b.lower.map_or(*threshold, |l| l.max(*threshold)));
        }
    }
    r
}

impl LinearModelTree {
    /// Split on CT predicates until every region is decided. At each node the
    /// CT with the fewest undecided predicates (ties by canonical condition
    /// order) contributes its first undecided predicate.
    pub fn from_summary(summary: &ChangeSummary) -> Self {
        let conditions: Vec<Condition> = summary.cts.iter().map(|ct| ct.condition.clone()).collect();
        let live: Vec<usize> = (0..conditions.len()).collect();
        let root = build(summary, &conditions, &live, &Region::new());
        LinearModelTree {
            target: summary.target.clone(),
            root,
            conditions,
        }
    }

    pub fn leaf_count(&self) -> usize {
        fn count(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { yes, no, .. } => count(yes) + count(no),
            }
        }
        count(&self.root)
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { yes, no, .. } => 1 + depth(yes).max(depth(no)),
            }
        }
        depth(&self.root)
    }

    /// Leaf reached by one row.
    pub fn route(&self, frame: &Frame, row: usize) -> Result<&TreeNode, SummaryError> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { .. } => return Ok(node),
                TreeNode::Split { predicate, yes, no } => {
                    node = if predicate.matches(frame, row)? { yes } else { no };
                }
            }
        }
    }

    /// The CT rules at the leaves plus, when present, one default identity rule.
    pub fn flatten(&self) -> Vec<FlatRule> {
        let mut seen = BTreeSet::new();
        let mut rules = Vec::new();
        let mut default = None;
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Split { yes, no, .. } => {
                    stack.push(no);
                    stack.push(yes);
                }
                TreeNode::Leaf {
                    ct: Some(i),
                    transformation,
                } => {
                    if seen.insert(*i) {
                        rules.push((
                            *i,
                            FlatRule {
                                condition: Some(self.conditions[*i].clone()),
                                transformation: transformation.clone(),
                            },
                        ));
                    }
                }
                TreeNode::Leaf {
                    ct: None,
                    transformation,
                } => {
                    default.get_or_insert_with(|| FlatRule {
                        condition: None,
                        transformation: transformation.clone(),
                    });
                }
            }
        }
        rules.sort_by_key(|(i, _)| *i);
        let mut out: Vec<FlatRule> = rules.into_iter().map(|(_, r)| r).collect();
        out.extend(default);
        out
    }

    /// Indented text rendering with yes/no branches.
    pub fn render(&self) -> String {
        fn walk(n: &TreeNode, target: &str, prefix: &str, out: &mut String) {
            match n {
                TreeNode::Leaf { transformation, .. } => {
                    writeln!(out, "{}", transformation.render(target)).unwrap();
                }
                TreeNode::Split { predicate, yes, no } => {
                    writeln!(out, "{predicate}?").unwrap();
                    for (label, child, last) in [("yes", yes, false), ("no", no, true)] {
                        let (branch, pad) = if last {
                            ("└── ", "    ")
                        } else {
                            ("├── ", "│   ")
                        };
                        write!(out, "{prefix}{branch}{label}: ").unwrap();
                        walk(child, target, &format!("{prefix}{pad}"), out);
                    }
                }
            }
        }
        let mut out = String::new();
        walk(&self.root, &self.target, "", &mut out);
        out
    }
}

fn build(summary: &ChangeSummary, conditions: &[Condition], live: &[usize], region: &Region) -> TreeNode {
    // undecided predicates of every CT still compatible with the region
    let mut open: Vec<(usize, Vec<&Predicate>)> = Vec::new();
    for &i in live {
        let mut rest = Vec::new();
        let mut dead = false;
        for p in conditions[i].predicates() {
            match status(p, region) {
                Status::Implied => {}
                Status::Contradicted => {
                    dead = true;
                    break;
                }
                Status::Open => rest.push(p),
            }
        }
        if !dead {
            open.push((i, rest));
        }
    }
    if open.is_empty() {
        return TreeNode::Leaf {
            ct: None,
            transformation: LinearTransformation::identity(&summary.target),
        };
    }
    if let Some((i, _)) = open.iter().find(|(_, rest)| rest.is_empty()) {
        return TreeNode::Leaf {
            ct: Some(*i),
            transformation: summary.cts[*i].transformation.clone(),
        };
    }
    let (_, rest) = open
        .iter()
        .min_by(|a, b| a.1.len().cmp(&b.1.len()).then(conditions[a.0].cmp(&conditions[b.0])))
        .expect("non-empty");
    let predicate = rest[0].clone();
    let still: Vec<usize> = open.iter().map(|(i, _)| *i).collect();
    let yes = build(summary, conditions, &still, &restrict(region, &predicate, true));
    let no = build(summary, conditions, &still, &restrict(region, &predicate, false));
    TreeNode::Split {
        predicate,
        yes: Box::new(yes),
        no: Box::new(no),
    }
}
