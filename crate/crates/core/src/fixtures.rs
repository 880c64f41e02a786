//! Bundled datasets used by tests, benchmarks and the `reproduce` command.

use crate::frame::{read_csv, Frame, ReadOptions};

/// Raw CSV text of the mtcars dataset (1974 Motor Trend road tests; public
/// domain, as shipped with R's datasets package). The first column `model`
/// holds the car names.
pub const MTCARS_CSV: &str = include_str!("../fixtures/mtcars.csv");

/// The mtcars dataset as a frame: 32 rows, 11 numeric columns, with the car
/// names stored as row labels.
pub fn mtcars() -> Frame {
    let options = ReadOptions {
        rownames: Some("model".to_string()),
        ..ReadOptions::default()
    };
    read_csv(MTCARS_CSV.as_bytes(), &options).expect("bundled fixture parses")
}
