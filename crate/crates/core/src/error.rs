//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Errors fall into two broad classes: *data/usage* errors (bad schemas,
/// malformed input, out-of-domain arguments) and *fit* errors (singular
/// designs, non-convergence, degenerate inputs). [`Error::is_fit_error`]
/// distinguishes them so callers can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Formula or value syntax error, with the byte offset of the offending token.
    #[error("syntax error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Malformed delimited input (ragged row, bad quoting, ...).
    #[error("csv error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Csv { line: Option<u64>, message: String },

    /// A referenced column, key, or header does not exist or is duplicated.
    #[error("schema error: {0}")]
    Schema(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An operation received a column of the wrong type.
    #[error("type error: {0}")]
    Type(String),

    /// A special-function argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A construct the library deliberately does not implement.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A null cell was found in data used by a fitter.
    #[error("null value in column `{column}` at row {row}")]
    NullCell { column: String, row: usize },

    /// The design matrix is rank deficient; `term` names the aliased column.
    #[error("singular design: term `{term}` is linearly dependent on earlier terms")]
    SingularDesign { term: String },

    /// The Gauss-Newton Jacobian lost full column rank.
    #[error("singular gradient")]
    SingularGradient,

    /// Fewer observations than free coefficients.
    #[error("insufficient data: {n} rows for {p} coefficients")]
    InsufficientData { n: usize, p: usize },

    /// Residuals were not finite at the starting parameter values.
    #[error("bad start: {0}")]
    BadStart(String),

    /// An iterative fit failed to converge; carries the last iterate.
    #[error("did not converge after {iterations} iterations (last estimates {estimates:?})")]
    NoConvergence {
        iterations: usize,
        estimates: Vec<f64>,
    },

    /// Statistically degenerate input (e.g. zero variance).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Numerical routine failed internally (should not happen on valid input).
    #[error("internal error: {0}")]
    Internal(String),

    /// Per-group outputs of a split-apply-combine step did not share a schema.
    #[error("combine error in group {group}: {message}")]
    CombineMismatch { group: String, message: String },

    /// A per-group computation failed; names the offending group or replicate.
    #[error("group {group}: {source}")]
    GroupFailed {
        group: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors raised while fitting a model (as opposed to usage,
    /// schema, or input-format errors).
    pub fn is_fit_error(&self) -> bool {
        match self {
            Error::SingularDesign { .. }
            | Error::SingularGradient
            | Error::InsufficientData { .. }
            | Error::BadStart(_)
            | Error::NoConvergence { .. }
            | Error::Degenerate(_)
            | Error::NullCell { .. } => true,
            Error::GroupFailed { source, .. } => source.is_fit_error(),
            _ => false,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line());
        Error::Csv {
            line,
            message: err.to_string(),
        }
    }
}
