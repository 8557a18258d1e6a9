//! Least-squares slope estimation on log2-log2 axes, used for every
//! empirical convergence-order measurement in the crate.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LogLogFit {
    /// Fitted slope of log2(y) against log2(x).
    pub slope: f64,
    /// Intercept in log2 coordinates.
    pub intercept: f64,
    /// Coefficient of determination of the linear fit.
    pub r_squared: f64,
}

/// Ordinary least squares of `log2(y)` on `log2(x)`.
///
/// Rejects fewer than three samples and non-positive data, both of which
/// indicate a degenerate experiment rather than a fit problem.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit(format!(
            "length mismatch: {} xs vs {} ys",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 samples, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys.iter()).any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateFit(
            "log-log fit requires strictly positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.log2()).collect();
    fit_linear(&lx, &ly)
}

pub(crate) fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let d = y - (intercept + slope * x);
            d * d
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
    })
}
