//! Columnar data frames: ordered, named, equal-length typed columns.
//!
//! A [`Frame`] is the universal currency of the crate: every fitter consumes
//! one and every tidier produces one, which is what makes grouped, bootstrapped
//! and inflated pipelines recombinable. Frames are immutable after
//! construction and safe to share across threads.

mod csv_io;
mod grouped;
mod quantile;

pub use csv_io::{read_csv, ReadOptions};
pub use grouped::{AggregateSpec, Group, GroupedFrame, Reducer};
pub use quantile::quantile_type7;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A single cell value. Within one column all non-null cells share a variant.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    fn variant_rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) => 2,
            Value::Float(_) => 3,
            Value::Text(_) => 4,
        }
    }

    /// Numeric view of the cell, if it has one.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    /// Rendering used for CSV cells, group descriptions and cluster labels.
    pub fn render(&self) -> String {
        match self {
            Value::Null => String::new(),
            Value::Bool(b) => b.to_string(),
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format_float(*v),
            Value::Text(s) => s.clone(),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    /// Total order: numeric/text within a variant (floats by IEEE total
    /// order), variants ranked Null < Bool < Int < Float < Text. Group keys
    /// always come from one column, so cross-variant comparisons only break
    /// ties between heterogeneous frames.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => self.variant_rank().cmp(&other.variant_rank()),
        }
    }
}

/// Floats are rendered with 17 significant digits so that re-parsing
/// reproduces the original bits.
pub(crate) fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// Typed column storage; the null mask runs parallel to the values.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Float(Vec<f64>),
    Int(Vec<i64>),
    Text(Vec<String>),
    Bool(Vec<bool>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Float(v) => v.len(),
            ColumnData::Int(v) => v.len(),
            ColumnData::Text(v) => v.len(),
            ColumnData::Bool(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Name of the stored type, for error messages and schema checks.
    pub fn type_name(&self) -> &'static str {
        match self {
            ColumnData::Float(_) => "float",
            ColumnData::Int(_) => "int",
            ColumnData::Text(_) => "text",
            ColumnData::Bool(_) => "bool",
        }
    }
}

/// A named column of homogeneous values plus a per-row null mask.
#[derive(Debug, Clone)]
pub struct Column {
    name: String,
    data: ColumnData,
    nulls: Vec<bool>,
}

impl Column {
    pub fn new(name: impl Into<String>, data: ColumnData) -> Self {
        let nulls = vec![false; data.len()];
        Column {
            name: name.into(),
            data,
            nulls,
        }
    }

    pub fn with_nulls(name: impl Into<String>, data: ColumnData, nulls: Vec<bool>) -> Result<Self> {
        if nulls.len() != data.len() {
            return Err(Error::Argument("null mask length mismatch".into()));
        }
        Ok(Column {
            name: name.into(),
            data,
            nulls,
        })
    }

    pub fn float(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column::new(name, ColumnData::Float(values))
    }

    pub fn int(name: impl Into<String>, values: Vec<i64>) -> Self {
        Column::new(name, ColumnData::Int(values))
    }

    pub fn text(name: impl Into<String>, values: Vec<String>) -> Self {
        Column::new(name, ColumnData::Text(values))
    }

    pub fn bool(name: impl Into<String>, values: Vec<bool>) -> Self {
        Column::new(name, ColumnData::Bool(values))
    }

    /// A column holding `len` copies of `value`.
    pub fn repeat(name: impl Into<String>, value: &Value, len: usize) -> Self {
        match value {
            Value::Null => Column::with_nulls(
                name,
                ColumnData::Text(vec![String::new(); len]),
                vec![true; len],
            )
            .expect("mask length matches by construction"),
            Value::Bool(b) => Column::bool(name, vec![*b; len]),
            Value::Int(v) => Column::int(name, vec![*v; len]),
            Value::Float(v) => Column::float(name, vec![*v; len]),
            Value::Text(s) => Column::text(name, vec![s.clone(); len]),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_null(&self, row: usize) -> bool {
        self.nulls[row]
    }

    pub fn has_nulls(&self) -> bool {
        self.nulls.iter().any(|&n| n)
    }

    pub fn value(&self, row: usize) -> Value {
        if self.nulls[row] {
            return Value::Null;
        }
        match &self.data {
            ColumnData::Float(v) => Value::Float(v[row]),
            ColumnData::Int(v) => Value::Int(v[row]),
            ColumnData::Text(v) => Value::Text(v[row].clone()),
            ColumnData::Bool(v) => Value::Bool(v[row]),
        }
    }

    /// True when every cell is int or float (nulls permitted).
    pub fn is_numeric(&self) -> bool {
        matches!(self.data, ColumnData::Float(_) | ColumnData::Int(_))
    }

    /// All values as `f64`, erroring on non-numeric columns and null cells.
    pub fn to_f64_vec(&self) -> Result<Vec<f64>> {
        if !self.is_numeric() {
            return Err(Error::Type(format!(
                "column `{}` is {}, expected numeric",
                self.name,
                self.data.type_name()
            )));
        }
        if let Some(row) = self.nulls.iter().position(|&n| n) {
            return Err(Error::NullCell {
                column: self.name.clone(),
                row,
            });
        }
        Ok(match &self.data {
            ColumnData::Float(v) => v.clone(),
            ColumnData::Int(v) => v.iter().map(|&x| x as f64).collect(),
            _ => unreachable!(),
        })
    }

    /// Subset of the column at `rows` (indices may repeat).
    pub fn take(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Float(v) => ColumnData::Float(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Int(v) => ColumnData::Int(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Text(v) => {
                ColumnData::Text(rows.iter().map(|&i| v[i].clone()).collect())
            }
            ColumnData::Bool(v) => ColumnData::Bool(rows.iter().map(|&i| v[i]).collect()),
        };
        Column {
            name: self.name.clone(),
            data,
            nulls: rows.iter().map(|&i| self.nulls[i]).collect(),
        }
    }

    fn append(&mut self, other: &Column) -> Result<()> {
        match (&mut self.data, &other.data) {
            (ColumnData::Float(a), ColumnData::Float(b)) => a.extend_from_slice(b),
            (ColumnData::Int(a), ColumnData::Int(b)) => a.extend_from_slice(b),
            (ColumnData::Text(a), ColumnData::Text(b)) => a.extend(b.iter().cloned()),
            (ColumnData::Bool(a), ColumnData::Bool(b)) => a.extend_from_slice(b),
            _ => {
                return Err(Error::Type(format!(
                    "cannot append {} column to {} column `{}`",
                    other.data.type_name(),
                    self.data.type_name(),
                    self.name
                )))
            }
        }
        self.nulls.extend_from_slice(&other.nulls);
        Ok(())
    }
}

/// Ordered collection of equal-length columns, optionally carrying row labels.
///
/// Row labels are an attribute rather than a column; they surface as a
/// `.rownames` column only in `augment` output and on request in CSV output.
/// Unlike R rownames they need not be unique, so resampled frames keep them.
#[derive(Debug, Clone)]
pub struct Frame {
    columns: Vec<Column>,
    n_rows: usize,
    row_labels: Option<Vec<String>>,
}

impl Frame {
    /// Validates column-name uniqueness and equal lengths.
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        for col in &columns {
            if col.name().is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if col.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, expected {}",
                    col.name(),
                    col.len(),
                    n_rows
                )));
            }
        }
        for (i, col) in columns.iter().enumerate() {
            if columns[..i].iter().any(|c| c.name() == col.name()) {
                return Err(Error::Schema(format!(
                    "duplicate column name `{}`",
                    col.name()
                )));
            }
        }
        Ok(Frame {
            columns,
            n_rows,
            row_labels: None,
        })
    }

    /// An empty frame (no columns, no rows).
    pub fn empty() -> Self {
        Frame {
            columns: Vec::new(),
            n_rows: 0,
            row_labels: None,
        }
    }

    pub fn with_row_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(Error::Schema(format!(
                "{} row labels for {} rows",
                labels.len(),
                self.n_rows
            )));
        }
        self.row_labels = Some(labels);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(Column::name).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name() == name)
    }

    /// Looks a column up, erroring with a schema message when absent.
    pub fn require_column(&self, name: &str) -> Result<&Column> {
        self.column(name)
            .ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column(name).is_some()
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    /// Row subset; indices may repeat (resampling) and labels follow rows.
    pub fn take_rows(&self, rows: &[usize]) -> Frame {
        Frame {
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            n_rows: rows.len(),
            row_labels: self
                .row_labels
                .as_ref()
                .map(|labels| rows.iter().map(|&i| labels[i].clone()).collect()),
        }
    }

    /// Appends a column on the right.
    pub fn push_column(&mut self, column: Column) -> Result<()> {
        if !self.columns.is_empty() && column.len() != self.n_rows {
            return Err(Error::Schema(format!(
                "column `{}` has {} rows, expected {}",
                column.name(),
                column.len(),
                self.n_rows
            )));
        }
        if self.has_column(column.name()) {
            return Err(Error::Schema(format!(
                "duplicate column name `{}`",
                column.name()
            )));
        }
        if self.columns.is_empty() {
            self.n_rows = column.len();
        }
        self.columns.push(column);
        Ok(())
    }

    /// Vertical concatenation; frames must agree on column names and types.
    /// `context` names the offending piece in error messages.
    pub fn concat_rows(frames: &[Frame], context: impl Fn(usize) -> String) -> Result<Frame> {
        let Some(first) = frames.first() else {
            return Ok(Frame::empty());
        };
        let mut out = first.clone();
        out.row_labels = None;
        for (idx, frame) in frames.iter().enumerate().skip(1) {
            if frame.column_names() != out.column_names() {
                return Err(Error::CombineMismatch {
                    group: context(idx),
                    message: format!(
                        "column names {:?} do not match {:?}",
                        frame.column_names(),
                        out.column_names()
                    ),
                });
            }
            for (target, source) in out.columns.iter_mut().zip(&frame.columns) {
                target.append(source).map_err(|e| Error::CombineMismatch {
                    group: context(idx),
                    message: e.to_string(),
                })?;
            }
            out.n_rows += frame.n_rows;
        }
        Ok(out)
    }

    /// Numeric design view of the named columns, row-major.
    pub fn numeric_matrix(&self, names: &[&str]) -> Result<Matrix> {
        let cols: Vec<Vec<f64>> = names
            .iter()
            .map(|name| self.require_column(name)?.to_f64_vec())
            .collect::<Result<_>>()?;
        Matrix::from_columns(&cols)
    }

    /// Serializes to CSV (RFC 4180 quoting, comma delimiter); see
    /// [`write_csv`](Frame::write_csv_with) for options.
    pub fn to_csv(&self, include_row_labels: bool) -> Vec<u8> {
        csv_io::write_csv(self, include_row_labels, b',')
    }

    pub fn write_csv_with(&self, include_row_labels: bool, delimiter: u8) -> Vec<u8> {
        csv_io::write_csv(self, include_row_labels, delimiter)
    }

    /// One JSON object per row; `.rownames` is included when labels exist.
    /// Non-finite floats serialize as `null`.
    pub fn to_jsonl(&self) -> Vec<u8> {
        csv_io::write_jsonl(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_and_ragged_columns() {
        let err = Frame::new(vec![
            Column::int("a", vec![1, 2]),
            Column::int("a", vec![3, 4]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));

        let err = Frame::new(vec![
            Column::int("a", vec![1, 2]),
            Column::int("b", vec![3]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn take_rows_resamples_labels() {
        let frame = Frame::new(vec![Column::int("a", vec![10, 20, 30])])
            .unwrap()
            .with_row_labels(vec!["x".into(), "y".into(), "z".into()])
            .unwrap();
        let sub = frame.take_rows(&[2, 2, 0]);
        assert_eq!(sub.n_rows(), 3);
        assert_eq!(sub.row_labels().unwrap(), ["z", "z", "x"]);
        assert_eq!(sub.column("a").unwrap().value(0), Value::Int(30));
    }

    #[test]
    fn value_ordering_is_total_on_floats() {
        let a = Value::Float(f64::NAN);
        let b = Value::Float(1.0);
        assert_eq!(a.cmp(&a), Ordering::Equal);
        assert_ne!(a.cmp(&b), Ordering::Equal);
    }

    #[test]
    fn null_cells_are_reported_with_row() {
        let col = Column::with_nulls(
            "x",
            ColumnData::Float(vec![1.0, 0.0, 3.0]),
            vec![false, true, false],
        )
        .unwrap();
        match col.to_f64_vec().unwrap_err() {
            Error::NullCell { column, row } => {
                assert_eq!(column, "x");
                assert_eq!(row, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
