//! Shared input/output plumbing for the subcommands.

use std::io::Read;

use clap::ValueEnum;
use tidyfit_core::{read_csv, Frame, ReadOptions};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

/// Resolves the input source: the `--input` flag or the positional path,
/// with `-` (or nothing) meaning stdin.
pub fn resolve_input(flag: &Option<String>, positional: &Option<String>) -> Result<String, CliError> {
    match (flag, positional) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "input given both as --input and as a positional argument".into(),
        )),
        (Some(path), None) | (None, Some(path)) => Ok(path.clone()),
        (None, None) => Ok("-".to_string()),
    }
}

pub fn read_frame(
    path: &str,
    delimiter: char,
    rownames: Option<String>,
) -> Result<Frame, CliError> {
    if !delimiter.is_ascii() {
        return Err(CliError::Usage(format!(
            "delimiter `{delimiter}` is not an ASCII character"
        )));
    }
    let options = ReadOptions {
        delimiter: delimiter as u8,
        has_header: true,
        rownames,
    };
    let frame = if path == "-" {
        let mut buffer = Vec::new();
        std::io::stdin().read_to_end(&mut buffer)?;
        read_csv(buffer.as_slice(), &options)?
    } else {
        let file = std::fs::File::open(path)?;
        read_csv(std::io::BufReader::new(file), &options)?
    };
    Ok(frame)
}

/// Prints a frame to stdout. CSV bytes are exactly the library's
/// serialization, so CLI output stays byte-identical to `Frame::to_csv`.
pub fn emit(frame: &Frame, format: Format) -> Result<(), CliError> {
    use std::io::Write;
    let bytes = match format {
        Format::Csv => frame.to_csv(false),
        Format::Jsonl => frame.to_jsonl(),
    };
    std::io::stdout().write_all(&bytes)?;
    Ok(())
}
