//! Tidy model outputs for columnar data.
//!
//! Fitted models carry three kinds of information with three different
//! shapes: per-component values (coefficients, clusters), per-observation
//! values (fitted values, residuals, assignments) and whole-model values
//! (R², information criteria, objective totals). This crate fits regression,
//! nonlinear least-squares, k-means and correlation models on [`Frame`]s and
//! extracts each level as its own frame:
//!
//! * `tidy_*` — one row per model component,
//! * `augment_*` — the original observations plus `.`-prefixed columns,
//! * `glance_*` — a one-row model summary.
//!
//! Because every output is a plain frame with ordinary columns (no row-name
//! magic), results recombine freely across subgroups, bootstrap replicates
//! and simulation grids via [`Frame::group_by`], [`Frame::bootstrap_replicates`]
//! and [`Frame::inflate`].
//!
//! ```
//! use tidyfit_core::prelude::*;
//!
//! let mtcars = tidyfit_core::fixtures::mtcars();
//! let Formula::Linear(formula) = parse_formula("mpg ~ wt + qsec", None)? else {
//!     unreachable!()
//! };
//! let per_group = mtcars
//!     .group_by(&["am"])?
//!     .apply_combine(|sub| tidy_lm(&fit_lm(&formula, sub)?, Some(0.95)))?;
//! assert_eq!(per_group.n_rows(), 6);
//! # Ok::<(), tidyfit_core::Error>(())
//! ```

pub mod cor;
pub mod dist;
pub mod error;
pub mod fixtures;
pub mod formula;
pub mod frame;
pub mod kmeans;
pub mod linreg;
pub mod matrix;
pub mod nls;
pub mod rng;

pub use error::{Error, Result};
pub use frame::{
    quantile_type7, read_csv, AggregateSpec, Column, ColumnData, Frame, Group, GroupedFrame,
    ReadOptions, Reducer, Value,
};
pub use matrix::Matrix;

/// The names most pipelines need.
pub mod prelude {
    pub use crate::cor::{pearson_test, spearman_test, tidy_htest, CorTestResult};
    pub use crate::formula::{parse_formula, Formula, LinearFormula, NlsFormula};
    pub use crate::frame::{
        quantile_type7, read_csv, AggregateSpec, Column, ColumnData, Frame, GroupedFrame,
        ReadOptions, Reducer, Value,
    };
    pub use crate::kmeans::{
        augment_kmeans, cluster_purity, fit_kmeans, glance_kmeans, sample_mixture, tidy_kmeans,
        KmeansFit, MixtureCenter,
    };
    pub use crate::linreg::{augment_lm, fit_lm, fit_ols, glance_lm, tidy_lm, LmFit};
    pub use crate::matrix::Matrix;
    pub use crate::nls::{augment_nls, fit_nls, glance_nls, tidy_nls, NlsControls, NlsFit};
    pub use crate::rng::{derive_seed, Xoshiro256StarStar};
    pub use crate::{Error, Result};
}
