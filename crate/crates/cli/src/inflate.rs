//! The `inflate` subcommand: cross a table with a factorial parameter grid.

use clap::Args;
use tidyfit_core::Value;

use crate::table::{emit, read_frame, resolve_input, Format};
use crate::CliError;

#[derive(Args)]
pub struct InflateArgs {
    /// Grid entry `name=v1,v2,...` (repeatable; first entry varies slowest)
    #[arg(long = "grid", value_name = "NAME=V1,V2,...", required = true)]
    grids: Vec<String>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[arg(long, default_value_t = ',')]
    delimiter: char,

    #[arg(long = "input", value_name = "PATH")]
    input_flag: Option<String>,

    /// Input CSV path; `-` or omitted reads stdin
    #[arg(value_name = "INPUT")]
    input: Option<String>,
}

pub fn run(args: InflateArgs) -> Result<(), CliError> {
    let grid: Vec<(String, Vec<Value>)> = args
        .grids
        .iter()
        .map(|entry| parse_grid_entry(entry))
        .collect::<Result<_, _>>()?;

    let path = resolve_input(&args.input_flag, &args.input)?;
    let frame = read_frame(&path, args.delimiter, None)?;
    let inflated = frame.inflate(&grid)?;
    emit(inflated.base(), args.format)
}

/// `name=v1,v2,...` with each value list typed like a CSV column: all-int,
/// else all-float, else text.
fn parse_grid_entry(entry: &str) -> Result<(String, Vec<Value>), CliError> {
    let (name, values) = entry.split_once('=').ok_or_else(|| {
        CliError::Usage(format!("bad --grid entry `{entry}` (expected name=v1,v2,...)"))
    })?;
    let tokens: Vec<&str> = values.split(',').collect();
    if tokens.iter().any(|t| t.is_empty()) {
        return Err(CliError::Usage(format!(
            "empty value in --grid entry `{entry}`"
        )));
    }
    let parsed = if tokens.iter().all(|t| t.parse::<i64>().is_ok()) {
        tokens
            .iter()
            .map(|t| Value::Int(t.parse().expect("checked")))
            .collect()
    } else if tokens.iter().all(|t| t.parse::<f64>().is_ok()) {
        tokens
            .iter()
            .map(|t| Value::Float(t.parse().expect("checked")))
            .collect()
    } else {
        tokens.iter().map(|t| Value::Text(t.to_string())).collect()
    };
    Ok((name.to_string(), parsed))
}
