//! The `fit` subcommand: read CSV, optionally group and/or bootstrap, fit
//! the requested model per piece, and recombine the tidy outputs.

use std::result::Result;

use clap::{Args, ValueEnum};
use tidyfit_core::prelude::*;
use tidyfit_core::Result as CoreResult;

use crate::table::{emit, read_frame, resolve_input, Format};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Lm,
    Nls,
    Kmeans,
    Spearman,
    Pearson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputKind {
    Tidy,
    Augment,
    Glance,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    model: Model,

    /// Model formula, e.g. "mpg ~ wt + qsec" or "mpg ~ k/wt + b"
    #[arg(long)]
    formula: Option<String>,

    /// Start values for nls parameters, e.g. "k=1,b=0"
    #[arg(long)]
    start: Option<String>,

    /// Number of clusters (kmeans)
    #[arg(long)]
    k: Option<usize>,

    /// Independent restarts (kmeans)
    #[arg(long, default_value_t = 1)]
    nstart: usize,

    /// Iteration cap (nls defaults to 50, kmeans to 100)
    #[arg(long)]
    max_iter: Option<usize>,

    /// First variable of a correlation test
    #[arg(long)]
    x: Option<String>,

    /// Second variable of a correlation test
    #[arg(long)]
    y: Option<String>,

    /// Fit separately within each combination of these columns
    #[arg(long, value_delimiter = ',')]
    group_by: Vec<String>,

    #[arg(long, value_enum, default_value_t = OutputKind::Tidy)]
    output: OutputKind,

    /// Confidence level for lm tidy intervals, e.g. 0.95
    #[arg(long)]
    conf_level: Option<f64>,

    /// Bootstrap replicate count; fits then run once per resample
    #[arg(long)]
    boot: Option<usize>,

    #[arg(long, default_value_t = 2014)]
    seed: u64,

    /// Column holding row names; moved out of the data into row labels
    #[arg(long)]
    rownames: Option<String>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Feature columns for kmeans (default: every numeric column not used
    /// as a grouping key)
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,

    #[arg(long, default_value_t = ',')]
    delimiter: char,

    #[arg(long = "input", value_name = "PATH")]
    input_flag: Option<String>,

    /// Input CSV path; `-` or omitted reads stdin
    #[arg(value_name = "INPUT")]
    input: Option<String>,
}

/// The per-piece model runner: gets a stream seed and the piece's rows.
type Fitter = Box<dyn Fn(u64, &Frame) -> CoreResult<Frame> + Sync>;

pub fn run(args: FitArgs) -> Result<(), CliError> {
    let fitter = build_fitter(&args)?;
    let path = resolve_input(&args.input_flag, &args.input)?;
    let frame = read_frame(&path, args.delimiter, args.rownames.clone())?;

    let keys: Vec<&str> = args.group_by.iter().map(String::as_str).collect();
    let seed = args.seed;
    let result = match (keys.is_empty(), args.boot) {
        (true, None) => fitter(seed, &frame)?,
        (true, Some(b)) => frame
            .bootstrap_replicates(b, seed)?
            .apply_combine_indexed(|i, _, sub| fitter(derive_seed(seed, 1 + i as u64), sub))?,
        (false, None) => frame
            .group_by(&keys)?
            .apply_combine_indexed(|i, _, sub| fitter(derive_seed(seed, 1 + i as u64), sub))?,
        (false, Some(b)) => frame.group_by(&keys)?.apply_combine_indexed(|gi, _, sub| {
            let boot_seed = derive_seed(seed, 1 + gi as u64);
            sub.bootstrap_replicates(b, boot_seed)?
                .apply_combine_indexed(|ri, _, piece| {
                    fitter(derive_seed(boot_seed, 1 + ri as u64), piece)
                })
        })?,
    };
    emit(&result, args.format)
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

/// Validates the model-specific arguments (before any data is read) and
/// builds the per-piece fitter.
fn build_fitter(args: &FitArgs) -> Result<Fitter, CliError> {
    let output = args.output;
    match args.model {
        Model::Lm => {
            let text = args
                .formula
                .as_ref()
                .ok_or_else(|| usage("--model lm requires --formula"))?;
            if args.start.is_some() {
                return Err(usage("--start only applies to --model nls"));
            }
            reject_kmeans_flags(args, "lm")?;
            reject_cor_flags(args, "lm")?;
            let Formula::Linear(formula) = parse_formula(text, None)? else {
                unreachable!("no start values provided")
            };
            let conf_level = args.conf_level;
            if let Some(level) = conf_level {
                if !(0.0 < level && level < 1.0) {
                    return Err(usage(format!("--conf-level {level} not in (0, 1)")));
                }
            }
            Ok(Box::new(move |_, sub| {
                let fit = fit_lm(&formula, sub)?;
                match output {
                    OutputKind::Tidy => tidy_lm(&fit, conf_level),
                    OutputKind::Augment => augment_lm(&fit),
                    OutputKind::Glance => glance_lm(&fit),
                }
            }))
        }
        Model::Nls => {
            let text = args
                .formula
                .as_ref()
                .ok_or_else(|| usage("--model nls requires --formula"))?;
            let start = parse_start(
                args.start
                    .as_ref()
                    .ok_or_else(|| usage("--model nls requires --start (e.g. k=1,b=0)"))?,
            )?;
            if args.conf_level.is_some() {
                return Err(usage(
                    "--conf-level only applies to --model lm; bootstrap nls fits instead",
                ));
            }
            reject_kmeans_flags(args, "nls")?;
            reject_cor_flags(args, "nls")?;
            let Formula::Nls(formula) = parse_formula(text, Some(&start))? else {
                unreachable!("start values provided")
            };
            let controls = NlsControls {
                max_iter: args.max_iter.unwrap_or(NlsControls::default().max_iter),
                ..NlsControls::default()
            };
            Ok(Box::new(move |_, sub| {
                let fit = fit_nls(&formula, sub, &controls)?;
                match output {
                    OutputKind::Tidy => tidy_nls(&fit),
                    OutputKind::Augment => augment_nls(&fit, sub),
                    OutputKind::Glance => glance_nls(&fit),
                }
            }))
        }
        Model::Kmeans => {
            let k = args
                .k
                .ok_or_else(|| usage("--model kmeans requires --k"))?;
            if args.formula.is_some() || args.start.is_some() {
                return Err(usage("--formula/--start do not apply to --model kmeans"));
            }
            if args.conf_level.is_some() {
                return Err(usage("--conf-level does not apply to --model kmeans"));
            }
            reject_cor_flags(args, "kmeans")?;
            let nstart = args.nstart;
            let max_iter = args.max_iter.unwrap_or(100);
            let explicit: Vec<String> = args.columns.clone();
            let mut excluded: Vec<String> = args.group_by.clone();
            if args.boot.is_some() {
                excluded.push("replicate".to_string());
            }
            Ok(Box::new(move |fit_seed, sub| {
                let names: Vec<String> = if explicit.is_empty() {
                    sub.columns()
                        .iter()
                        .filter(|c| c.is_numeric() && !excluded.contains(&c.name().to_string()))
                        .map(|c| c.name().to_string())
                        .collect()
                } else {
                    explicit.clone()
                };
                if names.is_empty() {
                    return Err(Error::Schema(
                        "no numeric feature columns for kmeans".into(),
                    ));
                }
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                let x = sub.numeric_matrix(&refs)?;
                let fit = fit_kmeans(&x, k, nstart, max_iter, fit_seed)?;
                match output {
                    OutputKind::Tidy => tidy_kmeans(&fit, &refs),
                    OutputKind::Augment => augment_kmeans(&fit, sub),
                    OutputKind::Glance => glance_kmeans(&fit),
                }
            }))
        }
        Model::Spearman | Model::Pearson => {
            let x_name = args
                .x
                .as_ref()
                .ok_or_else(|| usage("correlation tests require --x"))?
                .clone();
            let y_name = args
                .y
                .as_ref()
                .ok_or_else(|| usage("correlation tests require --y"))?
                .clone();
            if args.formula.is_some() || args.start.is_some() || args.k.is_some() {
                return Err(usage("--formula/--start/--k do not apply to correlation tests"));
            }
            if output != OutputKind::Tidy {
                return Err(usage(
                    "correlation tests only produce --output tidy (no per-observation or model-level table)",
                ));
            }
            let spearman = args.model == Model::Spearman;
            Ok(Box::new(move |_, sub| {
                let x = sub.require_column(&x_name)?.to_f64_vec()?;
                let y = sub.require_column(&y_name)?.to_f64_vec()?;
                let result = if spearman {
                    spearman_test(&x, &y)?
                } else {
                    pearson_test(&x, &y)?
                };
                tidy_htest(&result)
            }))
        }
    }
}

fn reject_kmeans_flags(args: &FitArgs, model: &str) -> Result<(), CliError> {
    if args.k.is_some() || !args.columns.is_empty() {
        return Err(usage(format!("--k/--columns do not apply to --model {model}")));
    }
    Ok(())
}

fn reject_cor_flags(args: &FitArgs, model: &str) -> Result<(), CliError> {
    if args.x.is_some() || args.y.is_some() {
        return Err(usage(format!("--x/--y do not apply to --model {model}")));
    }
    Ok(())
}

/// Parses `k=1,b=0` into ordered (name, value) pairs.
fn parse_start(text: &str) -> Result<Vec<(String, f64)>, CliError> {
    text.split(',')
        .map(|piece| {
            let (name, value) = piece
                .split_once('=')
                .ok_or_else(|| usage(format!("bad --start entry `{piece}` (expected name=value)")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad --start value in `{piece}`")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}
