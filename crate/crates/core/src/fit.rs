//! Log-log regression for convergence rates.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::FitRefused(format!(
            "need at least 2 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitRefused("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept,
        stderr,
        r2,
    })
}

/// Slope of `log err` against `log n`, optionally with the
/// `sqrt(log(n+1))` factor divided out first.
///
/// Rows with a zero (or non-finite) error are dropped with a warning; fewer
/// than `min_rows` usable rows refuses the fit.
pub fn loglog_fit(
    ns: &[usize],
    errs: &[f64],
    log_correction: bool,
    min_rows: usize,
) -> Result<LineFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&n, &e) in ns.iter().zip(errs) {
        if !(e > 0.0) || !e.is_finite() {
            warn!("dropping row n = {n} with error {e} from rate fit");
            continue;
        }
        let mut ly = e.ln();
        if log_correction {
            ly -= 0.5 * ((n as f64 + 1.0).ln()).ln();
        }
        x.push((n as f64).ln());
        y.push(ly);
    }
    if x.len() < min_rows {
        return Err(Error::FitRefused(format!(
            "{} usable rows, need at least {min_rows}",
            x.len()
        )));
    }
    ols(&x, &y)
}
