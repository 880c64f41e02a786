//! Type-7 (linear interpolation) sample quantiles.

use crate::error::{Error, Result};

/// Type-7 quantile: with the values sorted ascending and `h = (n-1)p + 1`
/// (1-based), returns `v[⌊h⌋] + (h - ⌊h⌋)(v[⌊h⌋+1] - v[⌊h⌋])`.
///
/// Monotone in `p`, bounded by the sample minimum and maximum, and exact at
/// `p = k/(n-1)` on a sorted vector.
pub fn quantile_type7(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("quantile of empty input".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("quantile input must be finite".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("quantile probability {p} not in [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));

    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        Ok(sorted[lo])
    } else {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    }
}
