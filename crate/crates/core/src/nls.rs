//! Nonlinear least squares by Gauss-Newton with step halving. The Jacobian
//! is built from symbolic partial derivatives of the model expression, and
//! each linear step is solved through the same Householder QR as OLS.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::formula::{bind_columns, data_bindings, eval_expr_n, Binding, Expr, NlsFormula};
use crate::frame::{Column, Frame};
use crate::linreg::{log_likelihood, wald_statistic};
use crate::matrix::{HouseholderQr, Matrix};

const RANK_TOL: f64 = 1e-10;

/// Iteration controls for [`fit_nls`].
#[derive(Debug, Clone, Copy)]
pub struct NlsControls {
    pub max_iter: usize,
    /// Convergence threshold on the relative decrease of the residual sum of
    /// squares between accepted steps.
    pub tol: f64,
    /// Smallest step-halving factor tried before giving up.
    pub min_step_factor: f64,
}

impl Default for NlsControls {
    fn default() -> Self {
        NlsControls {
            max_iter: 50,
            tol: 1e-8,
            min_step_factor: 1.0 / 1024.0,
        }
    }
}

/// A converged nonlinear least-squares fit.
#[derive(Debug, Clone)]
pub struct NlsFit {
    pub parameter_names: Vec<String>,
    pub estimates: Vec<f64>,
    /// `(JᵀJ)⁻¹` at the solution, for Wald standard errors.
    pub jtj_inverse: Matrix,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    /// Residual standard error `sqrt(rss / (n - q))`.
    pub sigma: f64,
    pub rss: f64,
    pub n: usize,
    pub q: usize,
    /// Accepted Gauss-Newton steps before convergence was detected.
    pub iterations: usize,
    /// Relative rss decrease of the final step.
    pub achieved_tol: f64,
    pub converged: bool,
}

impl NlsFit {
    pub fn df_residual(&self) -> usize {
        self.n - self.q
    }
}

struct Model<'a> {
    rhs: &'a Expr,
    partials: Vec<Expr>,
    data: Vec<(String, Vec<f64>)>,
    names: Vec<String>,
    y: Vec<f64>,
    n: usize,
}

impl<'a> Model<'a> {
    fn bindings(&self, theta: &[f64]) -> HashMap<&str, Binding<'_>> {
        let mut bindings = data_bindings(&self.data);
        for (name, value) in self.names.iter().zip(theta) {
            bindings.insert(name.as_str(), Binding::Scalar(*value));
        }
        bindings
    }

    fn residuals(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let fitted = eval_expr_n(self.rhs, &self.bindings(theta), self.n)?;
        Ok(self.y.iter().zip(&fitted).map(|(y, f)| y - f).collect())
    }

    fn rss(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.residuals(theta)?.iter().map(|r| r * r).sum())
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Matrix> {
        let bindings = self.bindings(theta);
        let columns: Vec<Vec<f64>> = self
            .partials
            .iter()
            .map(|d| eval_expr_n(d, &bindings, self.n))
            .collect::<Result<_>>()?;
        Matrix::from_columns(&columns)
    }
}

/// Fits `formula` to `frame` by Gauss-Newton iteration.
///
/// Each iteration solves the linearized least-squares step via QR and halves
/// it (down to `min_step_factor`) until the residual sum of squares does not
/// increase; a step whose relative rss decrease falls below `tol` stops the
/// iteration. The final probing step is a no-op, so it is not counted in
/// `iterations` (a fit started at its own optimum reports one iteration).
pub fn fit_nls(formula: &NlsFormula, frame: &Frame, controls: &NlsControls) -> Result<NlsFit> {
    let names: Vec<String> = formula.parameters.iter().map(|(n, _)| n.clone()).collect();
    for name in &names {
        if frame.has_column(name) {
            return Err(Error::Schema(format!(
                "parameter `{name}` is also a data column"
            )));
        }
    }
    let data_symbols: Vec<String> = {
        let mut symbols = formula.response.symbols();
        for s in formula.rhs.symbols() {
            if !symbols.contains(&s) {
                symbols.push(s);
            }
        }
        symbols.retain(|s| !names.contains(s));
        symbols
    };
    let data = bind_columns(frame, &data_symbols)?;

    let n = frame.n_rows();
    let q = names.len();
    if n <= q {
        return Err(Error::InsufficientData { n, p: q });
    }

    let partials: Vec<Expr> = names
        .iter()
        .map(|name| formula.rhs.differentiate(name))
        .collect::<Result<_>>()?;

    let y = eval_expr_n(&formula.response, &data_bindings(&data), n)?;
    let model = Model {
        rhs: &formula.rhs,
        partials,
        data,
        names: names.clone(),
        y,
        n,
    };

    let mut theta: Vec<f64> = formula.parameters.iter().map(|(_, v)| *v).collect();
    let mut rss = model.rss(&theta)?;
    if !rss.is_finite() {
        return Err(Error::BadStart(format!(
            "residuals are not finite at the start values {theta:?}"
        )));
    }

    let mut converged = false;
    let mut achieved_tol = f64::NAN;
    let mut accepted = 0usize;
    for _ in 0..controls.max_iter {
        let residuals = model.residuals(&theta)?;
        let jacobian = model.jacobian(&theta)?;
        let qr = HouseholderQr::factor(&jacobian)?;
        if qr.rank_deficient_column(RANK_TOL).is_some() {
            return Err(Error::SingularGradient);
        }
        let delta = qr.solve(&residuals)?;

        // Step halving: first factor that does not increase the rss wins.
        // The comparison tolerates one part in 1e12 so that a no-op step at
        // the optimum is not rejected over rounding noise.
        let mut factor = 1.0;
        let mut candidate = None;
        while factor >= controls.min_step_factor {
            let trial: Vec<f64> = theta
                .iter()
                .zip(&delta)
                .map(|(t, d)| t + factor * d)
                .collect();
            let trial_rss = model.rss(&trial)?;
            if trial_rss.is_finite() && trial_rss <= rss * (1.0 + 1e-12) {
                candidate = Some((trial, trial_rss));
                break;
            }
            factor /= 2.0;
        }
        let Some((trial, trial_rss)) = candidate else {
            return Err(Error::NoConvergence {
                iterations: accepted,
                estimates: theta,
            });
        };

        let rel = if rss > 0.0 { (rss - trial_rss) / rss } else { 0.0 };
        theta = trial;
        rss = trial_rss;
        accepted += 1;
        if rel < controls.tol {
            converged = true;
            achieved_tol = rel;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: accepted,
            estimates: theta,
        });
    }
    let iterations = accepted.saturating_sub(1).max(1);

    let bindings = model.bindings(&theta);
    let fitted = eval_expr_n(&formula.rhs, &bindings, n)?;
    let residuals: Vec<f64> = model.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let jacobian = model.jacobian(&theta)?;
    let qr = HouseholderQr::factor(&jacobian)?;
    if qr.rank_deficient_column(RANK_TOL).is_some() {
        return Err(Error::SingularGradient);
    }
    let jtj_inverse = qr.gram_inverse()?;
    let sigma = (rss / (n - q) as f64).sqrt();

    Ok(NlsFit {
        parameter_names: names,
        estimates: theta,
        jtj_inverse,
        residuals,
        fitted,
        sigma,
        rss,
        n,
        q,
        iterations,
        achieved_tol,
        converged,
    })
}

/// Parameter-level summary: `(term, estimate, std.error, statistic, p.value)`
/// with Wald statistics on `n - q` degrees of freedom.
pub fn tidy_nls(fit: &NlsFit) -> Result<Frame> {
    if !fit.converged {
        return Err(Error::Argument("tidy of an unconverged nls fit".into()));
    }
    let df = fit.df_residual() as f64;
    let mut estimates = Vec::with_capacity(fit.q);
    let mut std_errors = Vec::with_capacity(fit.q);
    let mut statistics = Vec::with_capacity(fit.q);
    let mut p_values = Vec::with_capacity(fit.q);
    for j in 0..fit.q {
        let estimate = fit.estimates[j];
        let se = fit.sigma * fit.jtj_inverse.get(j, j).sqrt();
        let (statistic, p_value) = wald_statistic(estimate, se, df)?;
        estimates.push(estimate);
        std_errors.push(se);
        statistics.push(statistic);
        p_values.push(p_value);
    }
    Frame::new(vec![
        Column::text("term", fit.parameter_names.clone()),
        Column::float("estimate", estimates),
        Column::float("std.error", std_errors),
        Column::float("statistic", statistics),
        Column::float("p.value", p_values),
    ])
}

/// Observation-level output: the original columns plus `.fitted` and
/// `.resid`. `frame` must be the frame the model was fitted to.
pub fn augment_nls(fit: &NlsFit, frame: &Frame) -> Result<Frame> {
    if frame.n_rows() != fit.n {
        return Err(Error::Argument(format!(
            "augment frame has {} rows, fit used {}",
            frame.n_rows(),
            fit.n
        )));
    }
    let mut columns: Vec<Column> = frame.columns().to_vec();
    let mut frame_out = Frame::new({
        columns.push(Column::float(".fitted", fit.fitted.clone()));
        columns.push(Column::float(".resid", fit.residuals.clone()));
        columns
    })?;
    if let Some(labels) = frame.row_labels() {
        frame_out = frame_out.with_row_labels(labels.to_vec())?;
    }
    Ok(frame_out)
}

/// Model-level one-row summary: `(sigma, converged, achieved.tol, logLik,
/// AIC, BIC, deviance, df.residual)`, with the information criteria counting
/// `q + 1` parameters.
pub fn glance_nls(fit: &NlsFit) -> Result<Frame> {
    let n = fit.n as f64;
    let log_lik = log_likelihood(n, fit.rss);
    let k = (fit.q + 1) as f64;
    Frame::new(vec![
        Column::float("sigma", vec![fit.sigma]),
        Column::bool("converged", vec![fit.converged]),
        Column::float("achieved.tol", vec![fit.achieved_tol]),
        Column::float("logLik", vec![log_lik]),
        Column::float("AIC", vec![-2.0 * log_lik + 2.0 * k]),
        Column::float("BIC", vec![-2.0 * log_lik + n.ln() * k]),
        Column::float("deviance", vec![fit.rss]),
        Column::int("df.residual", vec![fit.df_residual() as i64]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Formula};
    use crate::frame::Value;
    use crate::linreg::fit_ols;

    fn nls_formula(text: &str, start: &[(&str, f64)]) -> NlsFormula {
        let start: Vec<(String, f64)> = start
            .iter()
            .map(|(n, v)| (n.to_string(), *v))
            .collect();
        match parse_formula(text, Some(&start)).unwrap() {
            Formula::Nls(f) => f,
            _ => unreachable!(),
        }
    }

    fn mtcars_fit() -> NlsFit {
        let mtcars = crate::fixtures::mtcars();
        let formula = nls_formula("mpg ~ k / wt + b", &[("k", 1.0), ("b", 0.0)]);
        fit_nls(&formula, &mtcars, &NlsControls::default()).unwrap()
    }

    #[test]
    fn linear_in_parameters_converges_in_one_iteration() {
        let fit = mtcars_fit();
        assert!(fit.converged);
        assert_eq!(fit.iterations, 1);
        assert!((fit.estimates[0] - 45.8294875375).abs() < 1e-6);
        assert!((fit.estimates[1] - 4.3862542274).abs() < 1e-6);
        assert!((fit.sigma - 2.774050272788795).abs() < 1e-8);
        assert_eq!(fit.df_residual(), 30);
    }

    #[test]
    fn matches_ols_on_the_induced_design() {
        let mtcars = crate::fixtures::mtcars();
        let fit = mtcars_fit();

        let wt = mtcars.column("wt").unwrap().to_f64_vec().unwrap();
        let mpg = mtcars.column("mpg").unwrap().to_f64_vec().unwrap();
        let design = Matrix::from_columns(&[
            wt.iter().map(|w| 1.0 / w).collect(),
            vec![1.0; wt.len()],
        ])
        .unwrap();
        let ols = fit_ols(&design, &mpg, &["k".to_string(), "b".to_string()]).unwrap();

        for j in 0..2 {
            let rel = (fit.estimates[j] - ols.coefficients[j]).abs() / ols.coefficients[j].abs();
            assert!(rel < 1e-8, "estimate {j}: {rel}");
            let se_nls = fit.sigma * fit.jtj_inverse.get(j, j).sqrt();
            let se_ols = ols.sigma * ols.xtx_inverse.get(j, j).sqrt();
            assert!((se_nls - se_ols).abs() / se_ols < 1e-8);
        }
    }

    #[test]
    fn start_at_optimum_is_a_converged_noop() {
        let mtcars = crate::fixtures::mtcars();
        let optimum = mtcars_fit().estimates;
        let formula = nls_formula(
            "mpg ~ k / wt + b",
            &[("k", optimum[0]), ("b", optimum[1])],
        );
        let fit = fit_nls(&formula, &mtcars, &NlsControls::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.iterations, 1);
        assert!(fit.achieved_tol.abs() < 1e-12);
        assert!((fit.estimates[0] - optimum[0]).abs() < 1e-9);
    }

    #[test]
    fn tidy_matches_summary_statistics() {
        let fit = mtcars_fit();
        let tidy = tidy_nls(&fit).unwrap();
        assert_eq!(
            tidy.column_names(),
            vec!["term", "estimate", "std.error", "statistic", "p.value"]
        );
        assert_eq!(tidy.column("term").unwrap().value(0), Value::Text("k".into()));
        let stat = tidy.column("statistic").unwrap().value(0).as_f64().unwrap();
        assert!((stat - 10.786).abs() < 1e-3, "{stat}");
        let p = tidy.column("p.value").unwrap().value(0).as_f64().unwrap();
        assert!((p - 7.64e-12).abs() / 7.64e-12 < 1e-3, "{p}");
    }

    #[test]
    fn augment_adds_fitted_and_resid() {
        let mtcars = crate::fixtures::mtcars();
        let fit = mtcars_fit();
        let aug = augment_nls(&fit, &mtcars).unwrap();
        assert_eq!(aug.n_rows(), 32);
        let mpg = aug.column("mpg").unwrap().to_f64_vec().unwrap();
        let fitted = aug.column(".fitted").unwrap().to_f64_vec().unwrap();
        let resid = aug.column(".resid").unwrap().to_f64_vec().unwrap();
        for i in 0..32 {
            assert!((fitted[i] + resid[i] - mpg[i]).abs() < 1e-10);
        }
        // Lotus Europa: wt = 1.513, fitted ~ 45.829/1.513 + 4.386.
        let wt = aug.column("wt").unwrap().to_f64_vec().unwrap();
        let idx = wt.iter().position(|&w| (w - 1.513).abs() < 1e-12).unwrap();
        assert!((fitted[idx] - 34.676).abs() < 1e-2);

        let wrong = mtcars.take_rows(&[0, 1, 2]);
        assert!(augment_nls(&fit, &wrong).is_err());
    }

    #[test]
    fn glance_reports_dispersion_and_criteria() {
        let fit = mtcars_fit();
        let glance = glance_nls(&fit).unwrap();
        let sigma = glance.column("sigma").unwrap().value(0).as_f64().unwrap();
        assert!((sigma - 2.774).abs() < 1e-3);
        assert_eq!(glance.column("df.residual").unwrap().value(0), Value::Int(30));
        let dev = glance.column("deviance").unwrap().value(0).as_f64().unwrap();
        assert!((dev - fit.rss).abs() < 1e-12);
        let aic = glance.column("AIC").unwrap().value(0).as_f64().unwrap();
        let bic = glance.column("BIC").unwrap().value(0).as_f64().unwrap();
        let k = (fit.q + 1) as f64;
        assert!((aic - bic - (2.0 - (fit.n as f64).ln()) * k).abs() < 1e-10);
    }

    #[test]
    fn bad_start_and_singular_gradient_are_detected() {
        let mtcars = crate::fixtures::mtcars();
        // log of a negative number at the start point.
        let formula = nls_formula("mpg ~ log(k - 100 * wt)", &[("k", 1.0)]);
        assert!(matches!(
            fit_nls(&formula, &mtcars, &NlsControls::default()),
            Err(Error::BadStart(_))
        ));

        // A parameter with an identically-zero partial derivative.
        let formula = nls_formula("mpg ~ k / wt + 0 * c", &[("k", 1.0), ("c", 0.0)]);
        assert!(matches!(
            fit_nls(&formula, &mtcars, &NlsControls::default()),
            Err(Error::SingularGradient)
        ));
    }

    #[test]
    fn max_iter_exhaustion_carries_last_iterate() {
        let mtcars = crate::fixtures::mtcars();
        let formula = nls_formula("mpg ~ k / wt + b", &[("k", 1.0), ("b", 0.0)]);
        let controls = NlsControls {
            max_iter: 1,
            ..NlsControls::default()
        };
        match fit_nls(&formula, &mtcars, &controls).unwrap_err() {
            Error::NoConvergence { iterations, estimates } => {
                assert_eq!(iterations, 1);
                assert!((estimates[0] - 45.8294875375).abs() < 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parameter_colliding_with_column_is_rejected() {
        let mtcars = crate::fixtures::mtcars();
        let formula = nls_formula("mpg ~ wt / qsec + b", &[("wt", 1.0), ("b", 0.0)]);
        assert!(matches!(
            fit_nls(&formula, &mtcars, &NlsControls::default()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn genuinely_nonlinear_model_recovers_truth() {
        // y = a * exp(r * x), fit from a generic start.
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&x| 5.0 * (0.7 * x).exp()).collect();
        let frame = Frame::new(vec![
            Column::float("x", x),
            Column::float("y", y),
        ])
        .unwrap();
        let formula = nls_formula("y ~ a * exp(r * x)", &[("a", 1.0), ("r", 0.1)]);
        let fit = fit_nls(&formula, &frame, &NlsControls::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.estimates[0] - 5.0).abs() < 1e-6, "{:?}", fit.estimates);
        assert!((fit.estimates[1] - 0.7).abs() < 1e-7);
        assert!(fit.iterations >= 2);
        assert!(fit.rss < 1e-12);
    }

    #[test]
    fn first_order_optimality_at_convergence() {
        // |Jᵀ r|∞ <= 1e-6 ‖r‖ ‖J‖∞ at the solution, on a noisy problem.
        let x: Vec<f64> = (1..=50).map(|i| i as f64 * 0.2).collect();
        let mut rng = crate::rng::Xoshiro256StarStar::seed_from_u64(55);
        let y: Vec<f64> = x
            .iter()
            .map(|&x| 8.0 / x + 2.0 + 0.3 * rng.standard_normal_pair().0)
            .collect();
        let frame = Frame::new(vec![Column::float("x", x), Column::float("y", y)]).unwrap();
        let formula = nls_formula("y ~ k / x + b", &[("k", 1.0), ("b", 0.0)]);
        let fit = fit_nls(&formula, &frame, &NlsControls::default()).unwrap();

        let xv = frame.column("x").unwrap().to_f64_vec().unwrap();
        let ones = vec![1.0; xv.len()];
        let j_cols: [Vec<f64>; 2] = [xv.iter().map(|x| 1.0 / x).collect(), ones];
        let resid_norm = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        let j_inf_norm = (0..xv.len())
            .map(|i| j_cols[0][i].abs() + j_cols[1][i].abs())
            .fold(0.0f64, f64::max);
        for col in &j_cols {
            let dot: f64 = col.iter().zip(&fit.residuals).map(|(j, r)| j * r).sum();
            assert!(
                dot.abs() <= 1e-6 * resid_norm * j_inf_norm,
                "gradient component {dot}"
            );
        }
    }

    #[test]
    fn exact_fit_p_value_policy() {
        // y = 2x exactly: sigma = 0, so the statistic is +inf and p is 0.
        let frame = Frame::new(vec![
            Column::float("x", vec![1.0, 2.0, 3.0, 4.0]),
            Column::float("y", vec![2.0, 4.0, 6.0, 8.0]),
        ])
        .unwrap();
        let formula = nls_formula("y ~ k * x", &[("k", 1.0)]);
        let fit = fit_nls(&formula, &frame, &NlsControls::default()).unwrap();
        assert_eq!(fit.rss, 0.0);
        let tidy = tidy_nls(&fit).unwrap();
        assert_eq!(
            tidy.column("statistic").unwrap().value(0),
            Value::Float(f64::INFINITY)
        );
        assert_eq!(tidy.column("p.value").unwrap().value(0), Value::Float(0.0));
    }
}
