//! Pearson and Spearman correlation tests with one-row tidy output.

use crate::dist;
use crate::error::{Error, Result};
use crate::frame::{Column, Frame};

/// Result of a correlation test.
///
/// `statistic` is the t statistic for Pearson and the rank-sum statistic S
/// for Spearman, matching the conventional summaries of each test.
#[derive(Debug, Clone)]
pub struct CorTestResult {
    pub method: &'static str,
    pub estimate: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

fn validate_pair(x: &[f64], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "input lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Argument(
            "correlation tests need at least 3 observations".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Argument("correlation inputs must be finite".into()));
    }
    Ok(x.len())
}

/// Sample Pearson correlation, or None when either variance is zero.
fn pearson_r(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Midranks: 1-based ranks with ties sharing their average rank.
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average of ranks i+1..=j+1.
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn t_approx_p(rho: f64, n: usize) -> Result<f64> {
    if rho.abs() >= 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    Ok(dist::t_two_sided_p(t, df)?.value())
}

/// Spearman rank correlation test.
///
/// Ties get midranks; the estimate is the Pearson correlation of the rank
/// vectors; `S = (1 - rho) * n(n^2 - 1) / 6`; the p-value uses the t
/// approximation on `n - 2` degrees of freedom (0 when `rho = ±1`).
pub fn spearman_test(x: &[f64], y: &[f64]) -> Result<CorTestResult> {
    let n = validate_pair(x, y)?;
    let rx = midranks(x);
    let ry = midranks(y);
    let rho = pearson_r(&rx, &ry).ok_or_else(|| {
        Error::Degenerate("all values tied; rank correlation is undefined".into())
    })?;
    let nf = n as f64;
    let statistic = (1.0 - rho) * nf * (nf * nf - 1.0) / 6.0;
    Ok(CorTestResult {
        method: "spearman",
        estimate: rho,
        statistic,
        p_value: t_approx_p(rho, n)?,
        n,
    })
}

/// Pearson product-moment correlation test with the t reference distribution
/// on `n - 2` degrees of freedom.
pub fn pearson_test(x: &[f64], y: &[f64]) -> Result<CorTestResult> {
    let n = validate_pair(x, y)?;
    let r = pearson_r(x, y)
        .ok_or_else(|| Error::Degenerate("zero variance input".into()))?;
    let df = (n - 2) as f64;
    let statistic = if r.abs() >= 1.0 {
        if r > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY }
    } else {
        r * (df / (1.0 - r * r)).sqrt()
    };
    Ok(CorTestResult {
        method: "pearson",
        estimate: r,
        statistic,
        p_value: t_approx_p(r, n)?,
        n,
    })
}

/// One-row tidy output: `(estimate, statistic, p.value, method)`.
pub fn tidy_htest(result: &CorTestResult) -> Result<Frame> {
    Frame::new(vec![
        Column::float("estimate", vec![result.estimate]),
        Column::float("statistic", vec![result.statistic]),
        Column::float("p.value", vec![result.p_value]),
        Column::text("method", vec![result.method.to_string()]),
    ])
}
