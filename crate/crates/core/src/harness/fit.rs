//! Least-squares rate fits in log-log coordinates.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of `log E` from the fitted line.
    pub residual: f64,
    /// Which input pairs entered the fit.
    pub used: Vec<bool>,
    pub warnings: Vec<String>,
}

/// Ordinary least squares of `log E` against `log eps`. Non-positive or non-finite
/// errors are skipped with a warning.
pub fn fit_rate(errors: &[f64], epsilons: &[f64]) -> Result<RateFit> {
    if errors.len() != epsilons.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} errors for {} epsilons",
            errors.len(),
            epsilons.len()
        )));
    }
    let mut warnings = Vec::new();
    let used: Vec<bool> = errors
        .iter()
        .zip(epsilons)
        .map(|(&e, &eps)| {
            let ok = e > 0.0 && e.is_finite() && eps > 0.0 && eps.is_finite();
            if !ok {
                warnings.push(format!("excluded eps = {eps}: error {e} is not positive"));
            }
            ok
        })
        .collect();
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .zip(epsilons)
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|((e, eps), _)| (eps.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::FitImpossible(format!("{} usable points, at least 3 needed", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitImpossible("all usable epsilons coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        slope,
        intercept,
        residual,
        used,
        warnings,
    })
}
