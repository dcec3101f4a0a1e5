//! Log-log least-squares rate fits.

use serde::Serialize;

use crate::error::{Error, Result};

/// `metric ≈ prefactor · eps^rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r2: f64,
}

/// Metrics at or below this floor are treated as solver noise.
pub const METRIC_FLOOR: f64 = 1e-13;

/// Fits the slope of `log(metric)` against `log(eps)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    for &(eps, m) in points {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::DegenerateFit(format!("eps must be positive, got {eps}")));
        }
        if !(m > METRIC_FLOOR) || !m.is_finite() {
            return Err(Error::DegenerateFit(format!("metric {m} at eps = {eps} is below the noise floor")));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all eps values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { rate, prefactor: intercept.exp(), r2 })
}
