use std::collections::BTreeMap;

use super::partitions::{design, subset, Partition};
use super::{l1_tolerance, DiscoveryError};
use crate::frame::Frame;
use crate::stats::{grid_index, grid_point, ols_fit, snap, NormalityGrid, Role};
use crate::summary::{Condition, LinearTransformation};

/// Lattice half-width per coefficient when searching on-grid exact fits for an
/// under-determined partition, indexed by the number of regressors.
const LATTICE_RADIUS: [i64; 4] = [0, 10, 3, 1];

#[derive(Debug, Clone, PartialEq)]
pub struct FittedPartition {
    pub condition: Condition,
    pub rows: Vec<usize>,
    pub transformation: LinearTransformation,
    /// L1 error of the chosen model over `rows`.
    pub l1: f64,
    /// Constants were moved onto the normality grid.
    pub snapped: bool,
    /// The partition had fewer independent design points than regressors.
    pub under_determined: bool,
}

struct Model {
    coefficients: Vec<f64>,
    intercept: f64,
}

/// Round to 12 significant digits, so that `1.0500000000000003` reads `1.05`.
fn clean(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

struct Block {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    scale: f64,
}

impl Block {
    fn new(x: &[&[f64]], y: &[f64], rows: &[usize]) -> Self {
        let y = subset(y, rows);
        let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        Block {
            x: x.iter().map(|c| subset(c, rows)).collect(),
            y,
            scale,
        }
    }

    fn len(&self) -> usize {
        self.y.len()
    }

    fn tol(&self) -> f64 {
        l1_tolerance(self.scale, self.len())
    }

    fn residual(&self, coefficients: &[f64], i: usize) -> f64 {
        self.y[i] - self.x.iter().zip(coefficients).map(|(c, b)| c[i] * b).sum::<f64>()
    }

    fn mean_residual(&self, coefficients: &[f64]) -> f64 {
        (0..self.len()).map(|i| self.residual(coefficients, i)).sum::<f64>() / self.len() as f64
    }

    fn l1(&self, m: &Model) -> f64 {
        (0..self.len())
            .map(|i| (self.residual(&m.coefficients, i) - m.intercept).abs())
            .sum()
    }

    /// Model with the given slopes and the grid-snapped mean residual as intercept.
    fn with_snapped_intercept(&self, coefficients: Vec<f64>, grid: &NormalityGrid) -> Model {
        let intercept = snap(self.mean_residual(&coefficients), Role::Amount, grid).snapped;
        Model {
            coefficients,
            intercept,
        }
    }
}

fn role(attr: &str, target: &str) -> Role {
    if attr == target {
        Role::Rate
    } else {
        Role::Amount
    }
}

/// Fit a transformation to every partition.
///
/// Unchanged partitions get the identity. Otherwise the new target is
/// regressed on the SOURCE values of `tran_attrs`. An exact fit whose
/// constants can all move onto the normality grid without losing exactness is
/// replaced by that on-grid model. A partition too small to identify its
/// coefficients is solved nearest the row-weighted mean slope of the
/// identified changed partitions, or nearest `reference` when there are none,
/// preferring exact on-grid solutions.
pub fn discover_transformations(
    frame: &Frame,
    partitions: &[Partition],
    tran_attrs: &[String],
    grid: &NormalityGrid,
    reference: &[f64],
) -> Result<Vec<FittedPartition>, DiscoveryError> {
    if reference.len() != tran_attrs.len() {
        return Err(DiscoveryError::InvalidConfig(format!(
            "reference has {} coefficients for {} regressors",
            reference.len(),
            tran_attrs.len()
        )));
    }
    let target = frame.target();
    let x = design(frame, tran_attrs)?;
    let y = frame.new_values();
    let delta = &frame.delta().delta;
    let p = tran_attrs.len();
    let roles: Vec<Role> = tran_attrs.iter().map(|a| role(a, target)).collect();

    enum Pending {
        Done(FittedPartition),
        Under(usize),
    }
    let mut pending = Vec::with_capacity(partitions.len());
    let mut weighted = vec![0.0; p];
    let mut weight = 0usize;
    for (i, part) in partitions.iter().enumerate() {
        if part.rows.is_empty() {
            log::warn!("{}", DiscoveryError::EmptyPartition(part.condition.to_string()));
            continue;
        }
        if part.rows.iter().all(|&r| delta[r].is_zero()) {
            pending.push(Pending::Done(FittedPartition {
                condition: part.condition.clone(),
                rows: part.rows.clone(),
                transformation: LinearTransformation::identity(target),
                l1: 0.0,
                snapped: false,
                under_determined: false,
            }));
            continue;
        }
        let block = Block::new(&x, y, &part.rows);
        let cols: Vec<&[f64]> = block.x.iter().map(|c| c.as_slice()).collect();
        let fit = ols_fit(&cols, &block.y, 0.0)?;
        if fit.rank < p {
            pending.push(Pending::Under(i));
            continue;
        }
        let (model, snapped) = identified_model(&block, fit.coefficients, &roles, grid);
        for (w, c) in weighted.iter_mut().zip(&model.coefficients) {
            *w += c * part.rows.len() as f64;
        }
        weight += part.rows.len();
        pending.push(Pending::Done(finish(
            part, &block, model, snapped, false, tran_attrs, target,
        )));
    }

    let reference: Vec<f64> = if weight > 0 {
        weighted.iter().map(|w| w / weight as f64).collect()
    } else {
        reference.to_vec()
    };
    let mut out = Vec::with_capacity(pending.len());
    for item in pending {
        match item {
            Pending::Done(f) => out.push(f),
            Pending::Under(i) => {
                let part = &partitions[i];
                let block = Block::new(&x, y, &part.rows);
                let (model, snapped) = under_determined_model(&block, &reference, &roles, grid)?;
                out.push(finish(part, &block, model, snapped, true, tran_attrs, target));
            }
        }
    }
    Ok(out)
}

fn finish(
    part: &Partition,
    block: &Block,
    model: Model,
    snapped: bool,
    under_determined: bool,
    tran_attrs: &[String],
    target: &str,
) -> FittedPartition {
    let l1 = block.l1(&model);
    let terms: BTreeMap<String, f64> = tran_attrs.iter().cloned().zip(model.coefficients).collect();
    FittedPartition {
        condition: part.condition.clone(),
        rows: part.rows.clone(),
        transformation: LinearTransformation::new(terms, model.intercept, target),
        l1,
        snapped,
        under_determined,
    }
}

/// Cleaned least-squares model, or its on-grid rounding when both are exact.
fn identified_model(block: &Block, raw: Vec<f64>, roles: &[Role], grid: &NormalityGrid) -> (Model, bool) {
    let threshold = 1e-9 * block.scale;
    let coefficients: Vec<f64> = raw
        .iter()
        .zip(&block.x)
        .map(|(c, col)| {
            let reach = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if c.abs() * reach <= threshold {
                0.0
            } else {
                clean(*c)
            }
        })
        .collect();
    let intercept = clean(block.mean_residual(&coefficients));
    let raw = Model {
        coefficients,
        intercept,
    };
    let raw_l1 = block.l1(&raw);
    let tol = block.tol();
    if raw_l1 > tol {
        return (raw, false);
    }
    let on_grid: Vec<f64> = raw
        .coefficients
        .iter()
        .zip(roles)
        .map(|(c, r)| if *c == 0.0 { 0.0 } else { snap(*c, *r, grid).snapped })
        .collect();
    let candidate = block.with_snapped_intercept(on_grid, grid);
    if block.l1(&candidate) <= raw_l1 + tol {
        (candidate, true)
    } else {
        (raw, false)
    }
}

/// Minimum-deviation solution around `reference`, replaced by the nearest
/// on-grid lattice point that fits at least as well.
fn under_determined_model(
    block: &Block,
    reference: &[f64],
    roles: &[Role],
    grid: &NormalityGrid,
) -> Result<(Model, bool), DiscoveryError> {
    let p = reference.len();
    let shifted: Vec<f64> = (0..block.len()).map(|i| block.residual(reference, i)).collect();
    let cols: Vec<&[f64]> = block.x.iter().map(|c| c.as_slice()).collect();
    let correction = ols_fit(&cols, &shifted, 0.0)?;
    let beta: Vec<f64> = reference
        .iter()
        .zip(&correction.coefficients)
        .map(|(r, d)| clean(r + d))
        .collect();
    let raw = Model {
        intercept: clean(block.mean_residual(&beta)),
        coefficients: beta.clone(),
    };
    let raw_l1 = block.l1(&raw);
    let Some(&radius) = LATTICE_RADIUS.get(p) else {
        return Ok((raw, false));
    };
    let tol = block.tol();
    let steps: Vec<f64> = roles.iter().map(|r| grid.step(*r)).collect();
    let centers: Vec<i64> = beta.iter().zip(&steps).map(|(b, s)| grid_index(*b, *s)).collect();

    let mut best: Option<(f64, f64, Model)> = None;
    let mut offsets = vec![-radius; p];
    loop {
        let coefficients: Vec<f64> = (0..p).map(|j| grid_point(centers[j] + offsets[j], steps[j])).collect();
        let distance: f64 = (0..p).map(|j| (coefficients[j] - beta[j]).abs() / steps[j]).sum();
        let model = block.with_snapped_intercept(coefficients, grid);
        let l1 = block.l1(&model);
        let better = match &best {
            None => true,
            Some((bl, bd, _)) => l1 < bl - tol || ((l1 - bl).abs() <= tol && distance < *bd),
        };
        if better {
            best = Some((l1, distance, model));
        }
        // odometer over the lattice
        let mut j = 0;
        while j < p && offsets[j] == radius {
            offsets[j] = -radius;
            j += 1;
        }
        if j == p {
            break;
        }
        offsets[j] += 1;
    }
    match best {
        Some((l1, _, model)) if l1 <= raw_l1 + tol => Ok((model, true)),
        _ => Ok((raw, false)),
    }
}
