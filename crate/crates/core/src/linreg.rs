//! Ordinary least squares via Householder QR, with `tidy`, `augment` and
//! `glance` output whose column schemas are a frozen public contract.

use crate::dist;
use crate::error::{Error, Result};
use crate::formula::{design_matrix, LinearFormula};
use crate::frame::{Column, Frame};
use crate::matrix::{HouseholderQr, Matrix};

/// Relative threshold on R's diagonal below which a design is declared
/// rank deficient.
const RANK_TOL: f64 = 1e-10;

/// A fitted linear model and every quantity its tidiers need.
#[derive(Debug, Clone)]
pub struct LmFit {
    pub term_names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// `(XᵀX)⁻¹`, for coefficient standard errors.
    pub xtx_inverse: Matrix,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    /// Leverage (hat) values, the diagonal of the projection matrix.
    pub hat: Vec<f64>,
    /// Residual standard error `sqrt(rss / (n - p))`.
    pub sigma: f64,
    pub rss: f64,
    /// Total sum of squares about the mean response.
    pub tss: f64,
    pub n: usize,
    pub p: usize,
    source: Option<FitSource>,
}

/// The data a formula-level fit was built from; `augment` needs it.
#[derive(Debug, Clone)]
struct FitSource {
    frame: Frame,
    /// Response symbols then term symbols, first-appearance order, deduplicated.
    symbols: Vec<String>,
}

impl LmFit {
    pub fn df_residual(&self) -> usize {
        self.n - self.p
    }
}

/// Least-squares fit of `y` on the columns of `x`.
///
/// Solved through a Householder QR factorization (never the normal
/// equations); leverage values are the squared row norms of the thin Q
/// factor. `names` labels the columns for tidy output and error messages.
pub fn fit_ols(x: &Matrix, y: &[f64], names: &[String]) -> Result<LmFit> {
    let n = x.rows();
    let p = x.cols();
    if names.len() != p {
        return Err(Error::Argument(format!(
            "{} names for {} design columns",
            names.len(),
            p
        )));
    }
    if y.len() != n {
        return Err(Error::Argument(format!(
            "response length {} does not match {} rows",
            y.len(),
            n
        )));
    }
    if n <= p {
        return Err(Error::InsufficientData { n, p });
    }

    let qr = HouseholderQr::factor(x)?;
    if let Some(k) = qr.rank_deficient_column(RANK_TOL) {
        return Err(Error::SingularDesign {
            term: names[k].clone(),
        });
    }

    let coefficients = qr.solve(y)?;
    let fitted = x.mul_vec(&coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|yi| (yi - mean_y) * (yi - mean_y)).sum();
    let sigma = (rss / (n - p) as f64).sqrt();
    let hat = qr.thin_q_row_sq_norms();
    let xtx_inverse = qr.gram_inverse()?;

    Ok(LmFit {
        term_names: names.to_vec(),
        coefficients,
        xtx_inverse,
        residuals,
        fitted,
        hat,
        sigma,
        rss,
        tss,
        n,
        p,
        source: None,
    })
}

/// Fits a linear formula against a frame and remembers the source data so
/// [`augment_lm`] can rebuild the modeled columns.
pub fn fit_lm(formula: &LinearFormula, frame: &Frame) -> Result<LmFit> {
    let design = design_matrix(formula, frame)?;
    let mut fit = fit_ols(&design.x, &design.y, &design.names)?;

    let mut symbols = formula.response.symbols();
    for term in &formula.terms {
        for s in term.expr.symbols() {
            if !symbols.contains(&s) {
                symbols.push(s);
            }
        }
    }
    fit.source = Some(FitSource {
        frame: frame.clone(),
        symbols,
    });
    Ok(fit)
}

/// Coefficient-level summary: one row per term with columns
/// `(term, estimate, std.error, statistic, p.value)`, plus
/// `conf.low`/`conf.high` Wald intervals when `conf_level` is given.
pub fn tidy_lm(fit: &LmFit, conf_level: Option<f64>) -> Result<Frame> {
    let df = fit.df_residual() as f64;
    let p = fit.p;

    let mut estimates = Vec::with_capacity(p);
    let mut std_errors = Vec::with_capacity(p);
    let mut statistics = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let estimate = fit.coefficients[j];
        let se = fit.sigma * fit.xtx_inverse.get(j, j).sqrt();
        let (statistic, p_value) = wald_statistic(estimate, se, df)?;
        estimates.push(estimate);
        std_errors.push(se);
        statistics.push(statistic);
        p_values.push(p_value);
    }

    let mut columns = vec![
        Column::text("term", fit.term_names.clone()),
        Column::float("estimate", estimates.clone()),
        Column::float("std.error", std_errors.clone()),
        Column::float("statistic", statistics),
        Column::float("p.value", p_values),
    ];
    if let Some(level) = conf_level {
        if level.is_nan() || level <= 0.0 || level >= 1.0 {
            return Err(Error::Argument(format!(
                "confidence level must be in (0, 1), got {level}"
            )));
        }
        let tq = dist::t_quantile((1.0 + level) / 2.0, df)?;
        let low: Vec<f64> = estimates
            .iter()
            .zip(&std_errors)
            .map(|(e, s)| e - tq * s)
            .collect();
        let high: Vec<f64> = estimates
            .iter()
            .zip(&std_errors)
            .map(|(e, s)| e + tq * s)
            .collect();
        columns.push(Column::float("conf.low", low));
        columns.push(Column::float("conf.high", high));
    }
    Frame::new(columns)
}

/// Wald t statistic and two-sided p-value with the degenerate-fit policy:
/// a zero standard error yields ±inf (p = 0), or NaN when the estimate is
/// also zero.
pub(crate) fn wald_statistic(estimate: f64, se: f64, df: f64) -> Result<(f64, f64)> {
    if se == 0.0 {
        let statistic = if estimate > 0.0 {
            f64::INFINITY
        } else if estimate < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        };
        let p = if statistic.is_nan() { f64::NAN } else { 0.0 };
        return Ok((statistic, p));
    }
    let statistic = estimate / se;
    let p = dist::t_two_sided_p(statistic, df)?.value();
    Ok((statistic, p))
}

/// Observation-level output: the modeled columns (preceded by `.rownames`
/// when the source frame carries row labels) followed by `.fitted`,
/// `.se.fit`, `.resid`, `.hat`, `.sigma`, `.cooksd`, `.std.resid`.
///
/// Rows with hat value exactly 1 get NaN in `.sigma`, `.cooksd` and
/// `.std.resid` (the leave-one-out quantities are undefined there).
pub fn augment_lm(fit: &LmFit) -> Result<Frame> {
    let source = fit.source.as_ref().ok_or_else(|| {
        Error::Argument("augment requires a fit built from a frame (use fit_lm)".into())
    })?;

    let n = fit.n;
    let p = fit.p as f64;
    let sigma2 = fit.sigma * fit.sigma;
    let df = fit.df_residual() as f64;

    let mut se_fit = Vec::with_capacity(n);
    let mut loo_sigma = Vec::with_capacity(n);
    let mut cooksd = Vec::with_capacity(n);
    let mut std_resid = Vec::with_capacity(n);
    for i in 0..n {
        let h = fit.hat[i];
        let r = fit.residuals[i];
        se_fit.push(fit.sigma * h.sqrt());
        if (1.0 - h).abs() < 1e-12 {
            loo_sigma.push(f64::NAN);
            cooksd.push(f64::NAN);
            std_resid.push(f64::NAN);
        } else {
            let one_minus_h = 1.0 - h;
            loo_sigma.push(((df * sigma2 - r * r / one_minus_h) / (df - 1.0)).sqrt());
            cooksd.push(r * r * h / (p * sigma2 * one_minus_h * one_minus_h));
            std_resid.push(r / (fit.sigma * one_minus_h.sqrt()));
        }
    }

    let mut columns: Vec<Column> = Vec::new();
    if let Some(labels) = source.frame.row_labels() {
        columns.push(Column::text(".rownames", labels.to_vec()));
    }
    for symbol in &source.symbols {
        columns.push(source.frame.require_column(symbol)?.clone());
    }
    columns.push(Column::float(".fitted", fit.fitted.clone()));
    columns.push(Column::float(".se.fit", se_fit));
    columns.push(Column::float(".resid", fit.residuals.clone()));
    columns.push(Column::float(".hat", fit.hat.clone()));
    columns.push(Column::float(".sigma", loo_sigma));
    columns.push(Column::float(".cooksd", cooksd));
    columns.push(Column::float(".std.resid", std_resid));
    Frame::new(columns)
}

/// Model-level one-row summary with columns `(r.squared, adj.r.squared,
/// sigma, statistic, p.value, df, logLik, AIC, BIC, deviance, df.residual)`.
///
/// The information criteria count `p + 1` parameters (coefficients plus the
/// error variance). A constant response (`tss = 0`) yields NaN `r.squared`
/// and `statistic` rather than an error.
pub fn glance_lm(fit: &LmFit) -> Result<Frame> {
    let n = fit.n as f64;
    let p = fit.p as f64;
    let df_residual = fit.df_residual() as f64;

    let (r_squared, adj_r_squared, statistic, p_value) = if fit.tss == 0.0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let r2 = 1.0 - fit.rss / fit.tss;
        let adj = 1.0 - (1.0 - r2) * (n - 1.0) / (n - p);
        let f = ((fit.tss - fit.rss) / (p - 1.0)) / (fit.rss / df_residual);
        let pv = if f.is_nan() {
            f64::NAN
        } else {
            dist::f_upper_tail_p(f.max(0.0), p - 1.0, df_residual)?.value()
        };
        (r2, adj, f, pv)
    };

    let log_lik = log_likelihood(n, fit.rss);
    let k = p + 1.0;
    let aic = -2.0 * log_lik + 2.0 * k;
    let bic = -2.0 * log_lik + n.ln() * k;

    Frame::new(vec![
        Column::float("r.squared", vec![r_squared]),
        Column::float("adj.r.squared", vec![adj_r_squared]),
        Column::float("sigma", vec![fit.sigma]),
        Column::float("statistic", vec![statistic]),
        Column::float("p.value", vec![p_value]),
        Column::int("df", vec![fit.p as i64]),
        Column::float("logLik", vec![log_lik]),
        Column::float("AIC", vec![aic]),
        Column::float("BIC", vec![bic]),
        Column::float("deviance", vec![fit.rss]),
        Column::int("df.residual", vec![fit.df_residual() as i64]),
    ])
}

/// Gaussian log-likelihood at the MLE variance `rss / n`.
pub(crate) fn log_likelihood(n: f64, rss: f64) -> f64 {
    -n / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (rss / n).ln() + 1.0)
}
