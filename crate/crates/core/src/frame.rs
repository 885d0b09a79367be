//! Columnar view of an aligned pair, keyed to one target attribute.
//!
//! Conditions and regressors read the SOURCE side. Categorical nulls become
//! the level [`NULL_LEVEL`]; numeric nulls are imputed with the column mean
//! for regression and never satisfy a threshold predicate.

use std::collections::BTreeMap;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;

use crate::snapshot::{compute_delta, AlignedPair, AttributeKind, Cell, DeltaColumn, SnapshotError, NULL_LEVEL};

/// Regressors with a larger null fraction are not offered for transformations.
pub const MAX_REGRESSOR_NULL_FRACTION: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct NumericColumn {
    /// Source values; `None` for nulls.
    pub raw: Vec<Option<f64>>,
    /// Exact source values with nulls imputed by the mean.
    pub exact: Vec<Decimal>,
    /// `exact` as floats.
    pub values: Vec<f64>,
    pub null_count: usize,
}

#[derive(Debug, Clone)]
pub enum Column {
    Categorical(Vec<String>),
    Numeric(NumericColumn),
}

impl Column {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Column::Categorical(_) => "categorical",
            Column::Numeric(_) => "numeric",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Frame {
    target: String,
    key_attribute: String,
    keys: Vec<String>,
    attributes: Vec<String>,
    columns: BTreeMap<String, Column>,
    delta: DeltaColumn,
    old: Vec<f64>,
    new: Vec<f64>,
}

impl Frame {
    pub fn new(pair: &AlignedPair, target: &str) -> Result<Frame, SnapshotError> {
        let delta = compute_delta(pair, target)?;
        let n = pair.len();
        let mut attributes = Vec::new();
        let mut columns = BTreeMap::new();
        for meta in pair.schema() {
            if meta.kind == AttributeKind::Key {
                continue;
            }
            let cells: Vec<&Cell> = (0..n)
                .map(|i| pair.source_cell(i, &meta.name).expect("attribute from shared schema"))
                .collect();
            let column = if meta.kind.is_numeric() {
                numeric_column(&cells)
            } else {
                Column::Categorical(
                    cells
                        .iter()
                        .map(|c| match c {
                            Cell::Null => NULL_LEVEL.to_string(),
                            other => other.to_string(),
                        })
                        .collect(),
                )
            };
            attributes.push(meta.name.clone());
            columns.insert(meta.name.clone(), column);
        }
        let old = delta.old_values.iter().map(dec_to_f64).collect();
        let new = delta.new_values.iter().map(dec_to_f64).collect();
        Ok(Frame {
            target: target.to_string(),
            key_attribute: pair.key_attribute().to_string(),
            keys: pair.row_order().iter().map(|k| k.to_string()).collect(),
            attributes,
            columns,
            delta,
            old,
            new,
        })
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn key_attribute(&self) -> &str {
        &self.key_attribute
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Non-key attributes in schema order.
    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.get(name)
    }

    pub fn numeric(&self, name: &str) -> Option<&NumericColumn> {
        match self.columns.get(name) {
            Some(Column::Numeric(c)) => Some(c),
            _ => None,
        }
    }

    pub fn categorical(&self, name: &str) -> Option<&[String]> {
        match self.columns.get(name) {
            Some(Column::Categorical(c)) => Some(c),
            _ => None,
        }
    }

    pub fn delta(&self) -> &DeltaColumn {
        &self.delta
    }

    /// Old target values as floats.
    pub fn old(&self) -> &[f64] {
        &self.old
    }

    /// New target values as floats.
    pub fn new_values(&self) -> &[f64] {
        &self.new
    }

    pub fn delta_f64(&self) -> Vec<f64> {
        self.delta.delta.iter().map(dec_to_f64).collect()
    }

    /// Null fraction of a numeric attribute, `None` for categorical or unknown names.
    pub fn null_fraction(&self, name: &str) -> Option<f64> {
        self.numeric(name)
            .map(|c| c.null_count as f64 / self.len().max(1) as f64)
    }
}

pub(crate) fn dec_to_f64(d: &Decimal) -> f64 {
    d.to_f64().unwrap_or(f64::NAN)
}

fn numeric_column(cells: &[&Cell]) -> Column {
    let present: Vec<Decimal> = cells.iter().filter_map(|c| c.as_decimal()).collect();
    let mean = if present.is_empty() {
        Decimal::ZERO
    } else {
        let sum = present.iter().fold(Decimal::ZERO, |a, b| a.saturating_add(*b));
        sum / Decimal::from(present.len())
    };
    let raw: Vec<Option<f64>> = cells.iter().map(|c| c.as_decimal().map(|d| dec_to_f64(&d))).collect();
    let exact: Vec<Decimal> = cells.iter().map(|c| c.as_decimal().unwrap_or(mean)).collect();
    let values = exact.iter().map(dec_to_f64).collect();
    Column::Numeric(NumericColumn {
        raw,
        exact,
        values,
        null_count: cells.len() - present.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{align, read_snapshot, LoadOptions};

    fn frame(a: &str, b: &str, target: &str) -> Result<Frame, SnapshotError> {
        let opts = LoadOptions::new("id");
        let s = read_snapshot(a.as_bytes(), &opts)?;
        let t = read_snapshot(b.as_bytes(), &opts)?;
        Frame::new(&align(&s, &t, "id")?, target)
    }

    #[test]
    fn nulls_become_level_or_mean() {
        let f = frame(
            "id,c,x,y\n1,a,1,5\n2,,3,6\n3,b,,7\n",
            "id,c,x,y\n1,a,1,6\n2,,3,6\n3,b,,9\n",
            "y",
        )
        .unwrap();
        assert_eq!(f.categorical("c").unwrap(), ["a", NULL_LEVEL, "b"]);
        let x = f.numeric("x").unwrap();
        assert_eq!(x.raw, [Some(1.0), Some(3.0), None]);
        assert_eq!(x.values, [1.0, 3.0, 2.0]);
        assert_eq!(x.null_count, 1);
        assert_eq!(f.old(), [5.0, 6.0, 7.0]);
        assert_eq!(f.delta_f64(), [1.0, 0.0, 2.0]);
        assert!(f.column("id").is_none());
    }
}
