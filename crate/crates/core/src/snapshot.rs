//! Snapshot ingestion, key alignment and target deltas.
//!
//! Numeric cells are held as exact decimals so that deltas and L1 distances
//! over the target column are computed without rounding.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorClass;

/// Categorical level used for null cells outside the target column.
pub const NULL_LEVEL: &str = "⟨null⟩";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },
    #[error("duplicate attribute `{0}` in header")]
    DuplicateAttribute(String),
    #[error("key `{0}` appears more than once")]
    DuplicateKey(String),
    #[error("key attribute `{0}` contains a null cell")]
    NullKey(String),
    #[error("dataset has no data rows")]
    EmptyDataset,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("invalid type hint for `{attribute}`: {message}")]
    InvalidTypeHint { attribute: String, message: String },
    #[error("attribute `{attribute}` hinted numeric but row {row} holds `{value}`")]
    InvalidNumber {
        attribute: String,
        row: usize,
        value: String,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("key sets differ: only in source {only_in_source:?}, only in target {only_in_target:?}")]
    KeySetMismatch {
        only_in_source: Vec<String>,
        only_in_target: Vec<String>,
    },
    #[error("target attribute `{0}` is not numeric")]
    NonNumericTarget(String),
    #[error("target attribute `{attribute}` is null for key `{key}`")]
    NullInTarget { attribute: String, key: String },
}

impl SnapshotError {
    pub fn class(&self) -> ErrorClass {
        match self {
            SnapshotError::Io { .. }
            | SnapshotError::MalformedCsv { .. }
            | SnapshotError::DuplicateAttribute(_)
            | SnapshotError::DuplicateKey(_)
            | SnapshotError::NullKey(_)
            | SnapshotError::EmptyDataset
            | SnapshotError::InvalidTypeHint { .. }
            | SnapshotError::InvalidNumber { .. } => ErrorClass::Input,
            SnapshotError::UnknownAttribute(_)
            | SnapshotError::SchemaMismatch(_)
            | SnapshotError::KeySetMismatch { .. }
            | SnapshotError::NonNumericTarget(_)
            | SnapshotError::NullInTarget { .. } => ErrorClass::Schema,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            SnapshotError::Io { .. } => "IoError",
            SnapshotError::MalformedCsv { .. } => "MalformedCsv",
            SnapshotError::DuplicateAttribute(_) => "DuplicateAttribute",
            SnapshotError::DuplicateKey(_) => "DuplicateKey",
            SnapshotError::NullKey(_) => "NullKey",
            SnapshotError::EmptyDataset => "EmptyDataset",
            SnapshotError::UnknownAttribute(_) => "UnknownAttribute",
            SnapshotError::InvalidTypeHint { .. } => "InvalidTypeHint",
            SnapshotError::InvalidNumber { .. } => "InvalidNumber",
            SnapshotError::SchemaMismatch(_) => "SchemaMismatch",
            SnapshotError::KeySetMismatch { .. } => "KeySetMismatch",
            SnapshotError::NonNumericTarget(_) => "NonNumericTarget",
            SnapshotError::NullInTarget { .. } => "NullInTarget",
        }
    }

    /// For `KeySetMismatch`, the sorted symmetric difference of the two key sets.
    pub fn symmetric_difference(&self) -> Option<Vec<String>> {
        match self {
            SnapshotError::KeySetMismatch {
                only_in_source,
                only_in_target,
            } => {
                let all: BTreeSet<&String> = only_in_source.iter().chain(only_in_target).collect();
                Some(all.into_iter().cloned().collect())
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributeKind {
    Categorical,
    NumericInteger,
    NumericReal,
    Key,
}

impl AttributeKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, AttributeKind::NumericInteger | AttributeKind::NumericReal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeMeta {
    pub name: String,
    pub kind: AttributeKind,
    pub distinct_count: usize,
    pub null_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Null,
    Text(String),
    Number(Decimal),
}

impl Cell {
    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            Cell::Number(d) => Some(*d),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Null => Ok(()),
            Cell::Text(s) => f.write_str(s),
            Cell::Number(d) => write!(f, "{d}"),
        }
    }
}

/// A primary-key value. Numeric keys order numerically, text keys lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KeyValue {
    Number(Decimal),
    Text(String),
}

impl Ord for KeyValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (KeyValue::Number(a), KeyValue::Number(b)) => a.cmp(b),
            (KeyValue::Text(a), KeyValue::Text(b)) => a.cmp(b),
            (KeyValue::Number(_), KeyValue::Text(_)) => Ordering::Less,
            (KeyValue::Text(_), KeyValue::Number(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for KeyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for KeyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyValue::Number(d) => write!(f, "{d}"),
            KeyValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeHint {
    Categorical,
    Numeric,
    Key,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub key: String,
    pub delimiter: u8,
    pub type_hints: BTreeMap<String, TypeHint>,
}

impl LoadOptions {
    pub fn new(key: impl Into<String>) -> Self {
        LoadOptions {
            key: key.into(),
            delimiter: b',',
            type_hints: BTreeMap::new(),
        }
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }

    pub fn with_hints(mut self, hints: BTreeMap<String, TypeHint>) -> Self {
        self.type_hints = hints;
        self
    }
}

/// Parse a `{attribute: "categorical"|"numeric"|"key"}` side file.
pub fn parse_type_hints(json: &str) -> Result<BTreeMap<String, TypeHint>, SnapshotError> {
    serde_json::from_str(json).map_err(|e| SnapshotError::InvalidTypeHint {
        attribute: "<file>".into(),
        message: e.to_string(),
    })
}

pub fn load_type_hints(path: impl AsRef<Path>) -> Result<BTreeMap<String, TypeHint>, SnapshotError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_type_hints(&text)
}

/// A typed relational table. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    key: String,
    schema: Vec<AttributeMeta>,
    rows: Vec<Vec<Cell>>,
}

impl Snapshot {
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn schema(&self) -> &[AttributeMeta] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|a| a.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeMeta> {
        self.schema.iter().find(|a| a.name == name)
    }

    fn key_index(&self) -> usize {
        self.column_index(&self.key).expect("key column validated at load")
    }

    pub fn key_value(&self, row: usize) -> KeyValue {
        match &self.rows[row][self.key_index()] {
            Cell::Number(d) => KeyValue::Number(*d),
            Cell::Text(s) => KeyValue::Text(s.clone()),
            Cell::Null => unreachable!("null keys rejected at load"),
        }
    }

    /// Write the snapshot as RFC 4180 CSV with a header row.
    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<(), SnapshotError> {
        let mut out = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
        let io_err = |e: csv::Error| SnapshotError::Io {
            path: "<writer>".into(),
            source: std::io::Error::other(e.to_string()),
        };
        out.write_record(self.schema.iter().map(|a| a.name.as_str()))
            .map_err(io_err)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|c| c.to_string())).map_err(io_err)?;
        }
        out.flush().map_err(|source| SnapshotError::Io {
            path: "<writer>".into(),
            source,
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, b',').expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

pub fn load_snapshot(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Snapshot, SnapshotError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_snapshot(file, opts)
}

/// Parse a snapshot from any reader. Kinds are inferred per column: all cells
/// numeric ⇒ numeric (integer when every value is integral), otherwise
/// categorical; type hints override inference.
pub fn read_snapshot<R: Read>(reader: R, opts: &LoadOptions) -> Result<Snapshot, SnapshotError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| malformed(&e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = BTreeSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(SnapshotError::DuplicateAttribute(name.clone()));
        }
    }
    let key_idx = header
        .iter()
        .position(|h| *h == opts.key)
        .ok_or_else(|| SnapshotError::UnknownAttribute(opts.key.clone()))?;
    for (name, hint) in &opts.type_hints {
        if !header.contains(name) {
            return Err(SnapshotError::UnknownAttribute(name.clone()));
        }
        if *hint == TypeHint::Key && *name != opts.key {
            return Err(SnapshotError::InvalidTypeHint {
                attribute: name.clone(),
                message: format!("only the key attribute `{}` may be hinted as key", opts.key),
            });
        }
    }

    let mut raw: Vec<Vec<Option<String>>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(&e))?;
        if record.len() != header.len() {
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            return Err(SnapshotError::MalformedCsv {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        raw.push(
            record
                .iter()
                .map(|f| {
                    let t = f.trim();
                    (!t.is_empty()).then(|| t.to_string())
                })
                .collect(),
        );
    }
    if raw.is_empty() {
        return Err(SnapshotError::EmptyDataset);
    }

    let mut columns: Vec<Vec<Cell>> = Vec::with_capacity(header.len());
    let mut kinds = Vec::with_capacity(header.len());
    for (j, name) in header.iter().enumerate() {
        let values: Vec<Option<&str>> = raw.iter().map(|r| r[j].as_deref()).collect();
        let parsed: Vec<Option<Decimal>> = values
            .iter()
            .map(|v| v.and_then(|s| Decimal::from_str(s).ok()))
            .collect();
        let all_numeric = values.iter().zip(&parsed).all(|(v, p)| v.is_none() || p.is_some());
        let any_value = values.iter().any(|v| v.is_some());

        let hint = opts.type_hints.get(name).copied();
        let numeric = match hint {
            Some(TypeHint::Categorical) => false,
            Some(TypeHint::Numeric) => {
                if let Some((row, v)) = values
                    .iter()
                    .zip(&parsed)
                    .enumerate()
                    .find_map(|(i, (v, p))| match (v, p) {
                        (Some(v), None) => Some((i, *v)),
                        _ => None,
                    })
                {
                    return Err(SnapshotError::InvalidNumber {
                        attribute: name.clone(),
                        row,
                        value: v.to_string(),
                    });
                }
                true
            }
            // key columns keep numeric cells when every key parses
            Some(TypeHint::Key) | None => all_numeric && any_value,
        };

        let cells: Vec<Cell> = if numeric {
            parsed
                .iter()
                .map(|p| p.map(Cell::Number).unwrap_or(Cell::Null))
                .collect()
        } else {
            values
                .iter()
                .map(|v| v.map(|s| Cell::Text(s.to_string())).unwrap_or(Cell::Null))
                .collect()
        };
        let kind = if j == key_idx {
            AttributeKind::Key
        } else if numeric {
            if parsed.iter().flatten().all(|d| d.fract().is_zero()) {
                AttributeKind::NumericInteger
            } else {
                AttributeKind::NumericReal
            }
        } else {
            AttributeKind::Categorical
        };
        columns.push(cells);
        kinds.push(kind);
    }

    // key checks
    let mut keys = BTreeSet::new();
    for cell in &columns[key_idx] {
        let kv = match cell {
            Cell::Null => return Err(SnapshotError::NullKey(opts.key.clone())),
            Cell::Number(d) => KeyValue::Number(*d),
            Cell::Text(s) => KeyValue::Text(s.clone()),
        };
        if !keys.insert(kv.clone()) {
            return Err(SnapshotError::DuplicateKey(kv.to_string()));
        }
    }

    let schema = header
        .iter()
        .zip(&kinds)
        .zip(&columns)
        .map(|((name, kind), cells)| column_meta(name, *kind, cells))
        .collect();
    let n = raw.len();
    let mut rows = vec![Vec::with_capacity(header.len()); n];
    for column in columns {
        for (row, cell) in rows.iter_mut().zip(column) {
            row.push(cell);
        }
    }
    Ok(Snapshot {
        key: opts.key.clone(),
        schema,
        rows,
    })
}

fn malformed(e: &csv::Error) -> SnapshotError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    SnapshotError::MalformedCsv {
        line,
        message: e.to_string(),
    }
}

fn column_meta(name: &str, kind: AttributeKind, cells: &[Cell]) -> AttributeMeta {
    let mut numbers = BTreeSet::new();
    let mut texts = BTreeSet::new();
    let mut nulls = 0;
    for c in cells {
        match c {
            Cell::Null => nulls += 1,
            Cell::Number(d) => {
                numbers.insert(d.normalize());
            }
            Cell::Text(s) => {
                texts.insert(s.as_str());
            }
        }
    }
    AttributeMeta {
        name: name.to_string(),
        kind,
        distinct_count: numbers.len() + texts.len(),
        null_count: nulls,
    }
}

/// Two snapshots joined on their primary key.
#[derive(Debug, Clone)]
pub struct AlignedPair {
    key_attribute: String,
    schema: Vec<AttributeMeta>,
    source: Snapshot,
    target: Snapshot,
    row_order: Vec<KeyValue>,
    source_rows: Vec<usize>,
    target_rows: Vec<usize>,
}

impl AlignedPair {
    pub fn key_attribute(&self) -> &str {
        &self.key_attribute
    }

    /// Unified schema in source column order.
    pub fn schema(&self) -> &[AttributeMeta] {
        &self.schema
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeMeta> {
        self.schema.iter().find(|a| a.name == name)
    }

    pub fn source(&self) -> &Snapshot {
        &self.source
    }

    pub fn target(&self) -> &Snapshot {
        &self.target
    }

    /// Shared keys in ascending order.
    pub fn row_order(&self) -> &[KeyValue] {
        &self.row_order
    }

    pub fn len(&self) -> usize {
        self.row_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_order.is_empty()
    }

    /// Source cell for the `i`-th aligned row.
    pub fn source_cell(&self, i: usize, attribute: &str) -> Option<&Cell> {
        let j = self.source.column_index(attribute)?;
        Some(&self.source.rows[self.source_rows[i]][j])
    }

    pub fn target_cell(&self, i: usize, attribute: &str) -> Option<&Cell> {
        let j = self.target.column_index(attribute)?;
        Some(&self.target.rows[self.target_rows[i]][j])
    }
}

pub fn align(source: &Snapshot, target: &Snapshot, key: &str) -> Result<AlignedPair, SnapshotError> {
    if source.key != key || target.key != key {
        return Err(SnapshotError::SchemaMismatch(format!(
            "snapshots keyed on `{}` / `{}`, expected `{key}`",
            source.key, target.key
        )));
    }

    let target_by_name: BTreeMap<&str, &AttributeMeta> = target.schema.iter().map(|a| (a.name.as_str(), a)).collect();
    let source_names: BTreeSet<&str> = source.schema.iter().map(|a| a.name.as_str()).collect();
    let target_names: BTreeSet<&str> = target_by_name.keys().copied().collect();
    if source_names != target_names {
        let missing: Vec<_> = source_names.symmetric_difference(&target_names).collect();
        return Err(SnapshotError::SchemaMismatch(format!(
            "attributes present on one side only: {missing:?}"
        )));
    }

    let mut schema = Vec::with_capacity(source.schema.len());
    for a in &source.schema {
        let b = target_by_name[a.name.as_str()];
        let kind = match (a.kind, b.kind) {
            (x, y) if x == y => x,
            (x, y) if x.is_numeric() && y.is_numeric() => AttributeKind::NumericReal,
            (x, y) => {
                return Err(SnapshotError::SchemaMismatch(format!(
                    "attribute `{}` is {x:?} in source but {y:?} in target",
                    a.name
                )))
            }
        };
        schema.push(AttributeMeta {
            name: a.name.clone(),
            kind,
            distinct_count: a.distinct_count,
            null_count: a.null_count,
        });
    }

    // Compare keys numerically only when both sides hold numeric keys.
    let both_numeric = [source, target].iter().all(|s| {
        let k = s.key_index();
        s.rows.iter().all(|r| matches!(r[k], Cell::Number(_)))
    });
    let key_of = |s: &Snapshot, i: usize| -> KeyValue {
        let kv = s.key_value(i);
        match (both_numeric, kv) {
            (false, KeyValue::Number(d)) => KeyValue::Text(d.to_string()),
            (_, kv) => kv,
        }
    };
    let src_keys: BTreeMap<KeyValue, usize> = (0..source.row_count()).map(|i| (key_of(source, i), i)).collect();
    let tgt_keys: BTreeMap<KeyValue, usize> = (0..target.row_count()).map(|i| (key_of(target, i), i)).collect();

    let only_in_source: Vec<String> = src_keys
        .keys()
        .filter(|k| !tgt_keys.contains_key(*k))
        .map(|k| k.to_string())
        .collect();
    let only_in_target: Vec<String> = tgt_keys
        .keys()
        .filter(|k| !src_keys.contains_key(*k))
        .map(|k| k.to_string())
        .collect();
    if !only_in_source.is_empty() || !only_in_target.is_empty() {
        return Err(SnapshotError::KeySetMismatch {
            only_in_source,
            only_in_target,
        });
    }

    let mut row_order = Vec::with_capacity(src_keys.len());
    let mut source_rows = Vec::with_capacity(src_keys.len());
    let mut target_rows = Vec::with_capacity(src_keys.len());
    for (k, &i) in &src_keys {
        row_order.push(k.clone());
        source_rows.push(i);
        target_rows.push(tgt_keys[k]);
    }
    Ok(AlignedPair {
        key_attribute: key.to_string(),
        schema,
        source: source.clone(),
        target: target.clone(),
        row_order,
        source_rows,
        target_rows,
    })
}

/// Old/new values of the target attribute in `row_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaColumn {
    pub target_attribute: String,
    pub old_values: Vec<Decimal>,
    pub new_values: Vec<Decimal>,
    pub delta: Vec<Decimal>,
    pub changed_mask: Vec<bool>,
    pub total_abs_change: Decimal,
}

impl DeltaColumn {
    pub fn changed_count(&self) -> usize {
        self.changed_mask.iter().filter(|c| **c).count()
    }
}

pub fn compute_delta(pair: &AlignedPair, target_attribute: &str) -> Result<DeltaColumn, SnapshotError> {
    let meta = pair
        .attribute(target_attribute)
        .ok_or_else(|| SnapshotError::UnknownAttribute(target_attribute.to_string()))?;
    if !meta.kind.is_numeric() {
        return Err(SnapshotError::NonNumericTarget(target_attribute.to_string()));
    }
    let n = pair.len();
    let mut old_values = Vec::with_capacity(n);
    let mut new_values = Vec::with_capacity(n);
    for i in 0..n {
        let get = |cell: Option<&Cell>| -> Result<Decimal, SnapshotError> {
            cell.and_then(Cell::as_decimal)
                .ok_or_else(|| SnapshotError::NullInTarget {
                    attribute: target_attribute.to_string(),
                    key: pair.row_order[i].to_string(),
                })
        };
        old_values.push(get(pair.source_cell(i, target_attribute))?);
        new_values.push(get(pair.target_cell(i, target_attribute))?);
    }
    let delta: Vec<Decimal> = new_values.iter().zip(&old_values).map(|(n, o)| n - o).collect();
    let changed_mask = delta.iter().map(|d| !d.is_zero()).collect();
    let total_abs_change = delta.iter().map(|d| d.abs()).sum();
    Ok(DeltaColumn {
        target_attribute: target_attribute.to_string(),
        old_values,
        new_values,
        delta,
        changed_mask,
        total_abs_change,
    })
}
