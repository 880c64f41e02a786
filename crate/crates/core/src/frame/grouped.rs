//! Grouping and the split-apply-combine machinery: `group_by`, `apply_combine`,
//! `aggregate`, factorial `inflate`, and bootstrap replication.
//!
//! Group evaluation is pure per group, so `apply_combine` fans groups out
//! across threads; output ordering follows group order regardless of
//! completion order.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{quantile_type7, Column, Frame, Value};
use crate::rng::Xoshiro256StarStar;

/// One group: the key-tuple and the base-frame row indices it owns.
#[derive(Debug, Clone)]
pub struct Group {
    pub key: Vec<Value>,
    pub rows: Vec<usize>,
}

/// A frame partitioned by the distinct values of its key columns.
///
/// Groups are ordered lexicographically by key value (numeric order for
/// numeric keys, string order for text), and every base row belongs to
/// exactly one group.
#[derive(Debug, Clone)]
pub struct GroupedFrame {
    base: Frame,
    keys: Vec<String>,
    groups: Vec<Group>,
}

impl GroupedFrame {
    pub fn base(&self) -> &Frame {
        &self.base
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Materializes one group's rows as a frame.
    pub fn group_frame(&self, index: usize) -> Frame {
        self.base.take_rows(&self.groups[index].rows)
    }

    /// Human-readable key description, used in error messages.
    pub fn describe_group(&self, index: usize) -> String {
        describe_key(&self.keys, &self.groups[index].key)
    }

    /// Applies `f` to every group and concatenates the results in group
    /// order, with the group's key columns at the front. Key columns already
    /// present in `f`'s output are moved to the front rather than duplicated,
    /// so `f = identity` returns the base frame with keys first.
    pub fn apply_combine<F>(&self, f: F) -> Result<Frame>
    where
        F: Fn(&Frame) -> Result<Frame> + Sync,
    {
        self.apply_combine_indexed(|_, _, frame| f(frame))
    }

    /// [`apply_combine`](Self::apply_combine) variant whose callback also
    /// receives the group index and key tuple (e.g. to derive per-group seeds).
    pub fn apply_combine_indexed<F>(&self, f: F) -> Result<Frame>
    where
        F: Fn(usize, &[Value], &Frame) -> Result<Frame> + Sync,
    {
        let pieces: Vec<Frame> = self
            .groups
            .par_iter()
            .enumerate()
            .map(|(index, group)| {
                let sub = self.base.take_rows(&group.rows);
                let out = f(index, &group.key, &sub).map_err(|e| Error::GroupFailed {
                    group: self.describe_group(index),
                    source: Box::new(e),
                })?;
                self.attach_keys(out, &group.key)
            })
            .collect::<Result<_>>()?;
        Frame::concat_rows(&pieces, |idx| self.describe_group(idx))
    }

    /// Moves or prepends the key columns so they lead the output schema.
    fn attach_keys(&self, frame: Frame, key: &[Value]) -> Result<Frame> {
        let n = frame.n_rows();
        let mut columns: Vec<Column> = Vec::with_capacity(frame.n_cols() + self.keys.len());
        for (name, value) in self.keys.iter().zip(key) {
            match frame.column(name) {
                Some(existing) => columns.push(existing.clone()),
                None => columns.push(Column::repeat(name.clone(), value, n)),
            }
        }
        for col in frame.columns() {
            if !self.keys.contains(&col.name().to_string()) {
                columns.push(col.clone());
            }
        }
        Frame::new(columns)
    }

    /// Grouped reduction: one output row per group, key columns first and one
    /// column per spec, in group order.
    pub fn aggregate(&self, specs: &[AggregateSpec]) -> Result<Frame> {
        let n_groups = self.groups.len();
        let mut key_columns: Vec<Vec<Value>> = vec![Vec::with_capacity(n_groups); self.keys.len()];
        let mut out_values: Vec<Vec<f64>> = vec![Vec::with_capacity(n_groups); specs.len()];

        for group in &self.groups {
            for (slot, value) in key_columns.iter_mut().zip(&group.key) {
                slot.push(value.clone());
            }
            let sub = self.base.take_rows(&group.rows);
            for (slot, spec) in out_values.iter_mut().zip(specs) {
                slot.push(spec.reduce(&sub)?);
            }
        }

        let mut columns: Vec<Column> = Vec::new();
        for (name, values) in self.keys.iter().zip(key_columns) {
            columns.push(column_from_values(name, &values));
        }
        for (spec, values) in specs.iter().zip(out_values) {
            let col = if matches!(spec.reducer, Reducer::Count) {
                Column::int(spec.output.clone(), values.iter().map(|&v| v as i64).collect())
            } else {
                Column::float(spec.output.clone(), values)
            };
            columns.push(col);
        }
        Frame::new(columns)
    }
}

/// A reduction over one numeric column of each group.
#[derive(Debug, Clone)]
pub struct AggregateSpec {
    pub output: String,
    pub column: String,
    pub reducer: Reducer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reducer {
    Quantile(f64),
    Median,
    Mean,
    Sum,
    Max,
    Count,
}

impl AggregateSpec {
    pub fn new(output: impl Into<String>, column: impl Into<String>, reducer: Reducer) -> Self {
        AggregateSpec {
            output: output.into(),
            column: column.into(),
            reducer,
        }
    }

    fn reduce(&self, sub: &Frame) -> Result<f64> {
        let column = sub.require_column(&self.column)?;
        if matches!(self.reducer, Reducer::Count) {
            return Ok(column.len() as f64);
        }
        let values = column.to_f64_vec()?;
        match &self.reducer {
            Reducer::Quantile(p) => quantile_type7(&values, *p),
            Reducer::Median => quantile_type7(&values, 0.5),
            Reducer::Mean => {
                if values.is_empty() {
                    return Err(Error::Argument("mean of empty group".into()));
                }
                Ok(values.iter().sum::<f64>() / values.len() as f64)
            }
            Reducer::Sum => Ok(values.iter().sum()),
            Reducer::Max => values
                .iter()
                .copied()
                .max_by(f64::total_cmp)
                .ok_or_else(|| Error::Argument("max of empty group".into())),
            Reducer::Count => unreachable!(),
        }
    }
}

fn describe_key(names: &[String], key: &[Value]) -> String {
    if names.is_empty() {
        return "<all rows>".to_string();
    }
    // Shortest float rendering: these strings are for humans, not re-parsing.
    let compact = |v: &Value| match v {
        Value::Float(f) => format!("{f}"),
        other => other.render(),
    };
    let parts: Vec<String> = names
        .iter()
        .zip(key)
        .map(|(n, v)| format!("{n}={}", compact(v)))
        .collect();
    parts.join(", ")
}

/// Builds a column from per-group key values (all the same variant).
fn column_from_values(name: &str, values: &[Value]) -> Column {
    let non_null = values.iter().find(|v| !matches!(v, Value::Null));
    match non_null {
        Some(Value::Int(_)) => Column::int(
            name,
            values.iter().map(|v| match v {
                Value::Int(i) => *i,
                _ => 0,
            }).collect(),
        ),
        Some(Value::Float(_)) => Column::float(
            name,
            values.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect(),
        ),
        Some(Value::Bool(_)) => Column::bool(
            name,
            values.iter().map(|v| matches!(v, Value::Bool(true))).collect(),
        ),
        _ => Column::text(name, values.iter().map(Value::render).collect()),
    }
}

impl Frame {
    /// Partitions the frame by the distinct tuples of the key columns.
    /// Groups come out sorted lexicographically by key value; rows within a
    /// group keep their original order.
    pub fn group_by(&self, keys: &[&str]) -> Result<GroupedFrame> {
        let key_columns: Vec<&Column> = keys
            .iter()
            .map(|k| self.require_column(k))
            .collect::<Result<_>>()?;

        // With zero keys every row maps to the empty tuple: one group.
        let mut map: BTreeMap<Vec<Value>, Vec<usize>> = BTreeMap::new();
        for row in 0..self.n_rows() {
            let key: Vec<Value> = key_columns.iter().map(|c| c.value(row)).collect();
            map.entry(key).or_default().push(row);
        }

        let groups = map
            .into_iter()
            .map(|(key, rows)| Group { key, rows })
            .collect();
        Ok(GroupedFrame {
            base: self.clone(),
            keys: keys.iter().map(|k| k.to_string()).collect(),
            groups,
        })
    }

    /// Factorial expansion: repeats the frame once per combination of the
    /// grid values, with the grid columns prepended and the result grouped by
    /// them. The first grid name varies slowest; within each combination the
    /// original rows appear in their original order.
    pub fn inflate(&self, grid: &[(String, Vec<Value>)]) -> Result<GroupedFrame> {
        for (name, values) in grid {
            if self.has_column(name) {
                return Err(Error::Schema(format!(
                    "grid name `{name}` collides with an existing column"
                )));
            }
            if values.is_empty() {
                return Err(Error::Argument(format!("empty value list for `{name}`")));
            }
            let rank = values[0].variant_rank();
            if values.iter().any(|v| v.variant_rank() != rank) {
                return Err(Error::Argument(format!(
                    "mixed value types in grid entry `{name}`"
                )));
            }
        }

        let n = self.n_rows();
        let combos: usize = grid.iter().map(|(_, v)| v.len()).product();

        // Odometer over the grid, first entry slowest.
        let mut combo_values: Vec<Vec<Value>> = Vec::with_capacity(combos);
        let mut counters = vec![0usize; grid.len()];
        for _ in 0..combos {
            combo_values.push(
                grid.iter()
                    .zip(&counters)
                    .map(|((_, values), &c)| values[c].clone())
                    .collect(),
            );
            for pos in (0..grid.len()).rev() {
                counters[pos] += 1;
                if counters[pos] < grid[pos].1.len() {
                    break;
                }
                counters[pos] = 0;
            }
        }

        let tiled: Vec<usize> = (0..combos).flat_map(|_| 0..n).collect();
        let mut base = self.take_rows(&tiled);
        let mut columns: Vec<Column> = Vec::with_capacity(grid.len() + self.n_cols());
        for (j, (name, _)) in grid.iter().enumerate() {
            let mut cells: Vec<Value> = Vec::with_capacity(combos * n);
            for combo in &combo_values {
                for _ in 0..n {
                    cells.push(combo[j].clone());
                }
            }
            columns.push(column_from_values(name, &cells));
        }
        columns.extend(base.columns().iter().cloned());
        let labels = base.row_labels().map(<[String]>::to_vec);
        base = Frame::new(columns)?;
        if let Some(labels) = labels {
            base = base.with_row_labels(labels)?;
        }

        let key_names: Vec<&str> = grid.iter().map(|(n, _)| n.as_str()).collect();
        base.group_by(&key_names)
    }

    /// Wraps the frame so downstream steps run once per bootstrap replicate:
    /// the result is grouped by a new integer column `replicate` (values
    /// `1..=b`), each group holding `n_rows` rows drawn uniformly with
    /// replacement from the original rows. Fully determined by `seed`.
    pub fn bootstrap_replicates(&self, b: usize, seed: u64) -> Result<GroupedFrame> {
        if b == 0 {
            return Err(Error::Argument("bootstrap requires B >= 1".into()));
        }
        let n = self.n_rows();
        if n == 0 {
            return Err(Error::Argument("bootstrap of an empty frame".into()));
        }
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
        let mut indices: Vec<usize> = Vec::with_capacity(b * n);
        for _ in 0..b {
            for _ in 0..n {
                indices.push(rng.bounded(n as u64) as usize);
            }
        }
        let resampled = self.take_rows(&indices);
        let labels = resampled.row_labels().map(<[String]>::to_vec);

        let mut replicate: Vec<i64> = Vec::with_capacity(b * n);
        for r in 1..=b {
            replicate.extend(std::iter::repeat_n(r as i64, n));
        }
        let mut columns = vec![Column::int("replicate", replicate)];
        columns.extend(resampled.columns().iter().cloned());
        let mut base = Frame::new(columns)?;
        if let Some(labels) = labels {
            base = base.with_row_labels(labels)?;
        }

        let groups = (0..b)
            .map(|r| Group {
                key: vec![Value::Int((r + 1) as i64)],
                rows: (r * n..(r + 1) * n).collect(),
            })
            .collect();
        Ok(GroupedFrame {
            base,
            keys: vec!["replicate".to_string()],
            groups,
        })
    }
}
