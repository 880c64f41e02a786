//! The `summarize` subcommand: grouped type-7 quantiles and other reductions.

use clap::Args;
use tidyfit_core::{AggregateSpec, Reducer};

use crate::table::{emit, read_frame, resolve_input, Format};
use crate::CliError;

#[derive(Args)]
pub struct SummarizeArgs {
    /// Group by these columns before reducing (omit for one overall group)
    #[arg(long, value_delimiter = ',')]
    group_by: Vec<String>,

    /// Output spec `name=reducer(column[,p])`; reducers: quantile, median,
    /// mean, sum, max, count. Example: `conf.low=quantile(estimate,0.025)`
    #[arg(long = "spec", value_name = "SPEC", required = true)]
    specs: Vec<String>,

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

pub fn run(args: SummarizeArgs) -> Result<(), CliError> {
    let specs: Vec<AggregateSpec> = args
        .specs
        .iter()
        .map(|s| parse_spec(s))
        .collect::<Result<_, _>>()?;

    let path = resolve_input(&args.input_flag, &args.input)?;
    let frame = read_frame(&path, args.delimiter, None)?;
    let keys: Vec<&str> = args.group_by.iter().map(String::as_str).collect();
    let result = frame.group_by(&keys)?.aggregate(&specs)?;
    emit(&result, args.format)
}

fn parse_spec(text: &str) -> Result<AggregateSpec, CliError> {
    let bad = |detail: &str| {
        CliError::Usage(format!(
            "bad --spec `{text}`: {detail} (expected name=reducer(column[,p]))"
        ))
    };
    let (output, call) = text.split_once('=').ok_or_else(|| bad("missing `=`"))?;
    let open = call.find('(').ok_or_else(|| bad("missing `(`"))?;
    if !call.ends_with(')') {
        return Err(bad("missing `)`"));
    }
    let reducer_name = call[..open].trim();
    let inner = &call[open + 1..call.len() - 1];

    let (column, reducer) = match reducer_name {
        "quantile" => {
            let (column, p) = inner
                .rsplit_once(',')
                .ok_or_else(|| bad("quantile needs a probability: quantile(column,p)"))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| bad("bad quantile probability"))?;
            (column, Reducer::Quantile(p))
        }
        "median" => (inner, Reducer::Median),
        "mean" => (inner, Reducer::Mean),
        "sum" => (inner, Reducer::Sum),
        "max" => (inner, Reducer::Max),
        "count" => (inner, Reducer::Count),
        other => return Err(bad(&format!("unknown reducer `{other}`"))),
    };
    let column = column.trim();
    if column.is_empty() {
        return Err(bad("empty column name"));
    }
    Ok(AggregateSpec::new(output.trim(), column, reducer))
}
