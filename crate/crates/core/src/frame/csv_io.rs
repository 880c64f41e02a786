//! CSV and JSON-lines serialization for frames.
//!
//! Reading infers column types per column (int ⊂ float ⊂ text promotion;
//! all-boolean token columns become bool). Empty cells are nulls. Writing
//! renders floats with 17 significant digits so values round-trip bit-exactly.

use std::io::Read;

use serde_json::{json, Map};

use crate::error::{Error, Result};
use crate::frame::{format_float, Column, ColumnData, Frame};

/// Options for [`read_csv`].
#[derive(Debug, Clone)]
pub struct ReadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    /// When set, the named column is removed from the frame and stored as
    /// row labels instead.
    pub rownames: Option<String>,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            delimiter: b',',
            has_header: true,
            rownames: None,
        }
    }
}

/// Parses delimited text into a typed [`Frame`].
pub fn read_csv(source: impl Read, options: &ReadOptions) -> Result<Frame> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(false)
        .from_reader(source);

    let names: Vec<String> = if options.has_header {
        let headers = reader.headers()?.clone();
        let names: Vec<String> = headers.iter().map(str::to_string).collect();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Schema(format!("duplicate header name `{name}`")));
            }
            if name.is_empty() {
                return Err(Error::Schema("empty header name".into()));
            }
        }
        names
    } else {
        Vec::new()
    };

    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut width = if names.is_empty() { None } else { Some(names.len()) };
    for record in reader.records() {
        let record = record?;
        match width {
            None => width = Some(record.len()),
            Some(w) if record.len() != w => {
                // csv's flexible(false) raises this itself when a header fixed
                // the width; this covers the headerless case.
                return Err(Error::Csv {
                    line: record.position().map(|p| p.line()),
                    message: format!("expected {w} fields, got {}", record.len()),
                });
            }
            _ => {}
        }
        cells.push(record.iter().map(str::to_string).collect());
    }

    let width = width.unwrap_or(0);
    let names = if names.is_empty() {
        (1..=width).map(|i| format!("c{i}")).collect()
    } else {
        names
    };

    let mut columns = Vec::with_capacity(width);
    for (j, name) in names.iter().enumerate() {
        let tokens: Vec<&str> = cells.iter().map(|row| row[j].as_str()).collect();
        columns.push(infer_column(name, &tokens));
    }

    let mut frame = Frame::new(columns)?;
    if let Some(rowname_col) = &options.rownames {
        let idx = frame
            .columns()
            .iter()
            .position(|c| c.name() == rowname_col)
            .ok_or_else(|| Error::Schema(format!("missing rowname column `{rowname_col}`")))?;
        let labels: Vec<String> = cells.iter().map(|row| row[idx].clone()).collect();
        let mut columns = frame.columns().to_vec();
        columns.remove(idx);
        frame = Frame::new(columns)?.with_row_labels(labels)?;
    }
    Ok(frame)
}

/// Per-column type inference over the non-null tokens.
fn infer_column(name: &str, tokens: &[&str]) -> Column {
    let nulls: Vec<bool> = tokens.iter().map(|t| t.is_empty()).collect();
    let present = || tokens.iter().zip(&nulls).filter(|(_, &n)| !n).map(|(t, _)| *t);

    let mut any = false;
    let mut all_int = true;
    let mut all_float = true;
    let mut all_bool = true;
    for token in present() {
        any = true;
        all_int = all_int && token.parse::<i64>().is_ok();
        all_float = all_float && token.parse::<f64>().is_ok();
        all_bool = all_bool && matches!(token, "true" | "false" | "TRUE" | "FALSE");
    }

    let data = if any && all_int {
        ColumnData::Int(
            tokens
                .iter()
                .map(|t| t.parse::<i64>().unwrap_or(0))
                .collect(),
        )
    } else if any && all_float {
        ColumnData::Float(
            tokens
                .iter()
                .map(|t| t.parse::<f64>().unwrap_or(0.0))
                .collect(),
        )
    } else if any && all_bool {
        ColumnData::Bool(
            tokens
                .iter()
                .map(|t| matches!(*t, "true" | "TRUE"))
                .collect(),
        )
    } else {
        ColumnData::Text(tokens.iter().map(|t| t.to_string()).collect())
    };
    Column::with_nulls(name, data, nulls).expect("mask built from the same tokens")
}

pub(crate) fn write_csv(frame: &Frame, include_row_labels: bool, delimiter: u8) -> Vec<u8> {
    let labels = if include_row_labels {
        frame.row_labels()
    } else {
        None
    };

    let mut out = Vec::new();
    let mut header: Vec<String> = Vec::with_capacity(frame.n_cols() + 1);
    if labels.is_some() {
        header.push(".rownames".to_string());
    }
    header.extend(frame.column_names().iter().map(|n| n.to_string()));
    write_record(&mut out, &header, delimiter);

    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for row in 0..frame.n_rows() {
        record.clear();
        if let Some(labels) = labels {
            record.push(labels[row].clone());
        }
        for col in frame.columns() {
            record.push(render_cell(col, row));
        }
        write_record(&mut out, &record, delimiter);
    }
    out
}

/// RFC-4180 record writer. A lone empty field is written as `""` so the row
/// survives re-reading (readers drop fully blank lines).
fn write_record(out: &mut Vec<u8>, fields: &[String], delimiter: u8) {
    for (i, field) in fields.iter().enumerate() {
        if i > 0 {
            out.push(delimiter);
        }
        let needs_quoting = field
            .bytes()
            .any(|b| b == delimiter || b == b'"' || b == b'\n' || b == b'\r')
            || (fields.len() == 1 && field.is_empty());
        if needs_quoting {
            out.push(b'"');
            for b in field.bytes() {
                if b == b'"' {
                    out.push(b'"');
                }
                out.push(b);
            }
            out.push(b'"');
        } else {
            out.extend_from_slice(field.as_bytes());
        }
    }
    out.push(b'\n');
}

fn render_cell(col: &Column, row: usize) -> String {
    if col.is_null(row) {
        return String::new();
    }
    match col.data() {
        ColumnData::Float(v) => format_float(v[row]),
        ColumnData::Int(v) => v[row].to_string(),
        ColumnData::Text(v) => v[row].clone(),
        ColumnData::Bool(v) => v[row].to_string(),
    }
}

pub(crate) fn write_jsonl(frame: &Frame) -> Vec<u8> {
    let mut out = Vec::new();
    for row in 0..frame.n_rows() {
        let mut object = Map::new();
        if let Some(labels) = frame.row_labels() {
            object.insert(".rownames".into(), json!(labels[row]));
        }
        for col in frame.columns() {
            let value = if col.is_null(row) {
                serde_json::Value::Null
            } else {
                match col.data() {
                    // json! maps non-finite floats to null.
                    ColumnData::Float(v) => json!(v[row]),
                    ColumnData::Int(v) => json!(v[row]),
                    ColumnData::Text(v) => json!(v[row]),
                    ColumnData::Bool(v) => json!(v[row]),
                }
            };
            object.insert(col.name().to_string(), value);
        }
        out.extend_from_slice(serde_json::Value::Object(object).to_string().as_bytes());
        out.push(b'\n');
    }
    out
}
