use crate::error::{GpkError, Result};
use serde::Serialize;

/// Least-squares power law y ≈ e^intercept · x^slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination in log-log coordinates, in [0, 1].
    pub r_squared: f64,
}

/// Fit log y = intercept + slope · log x.
pub fn fit_rate(x: &[f64], y: &[f64]) -> Result<RateReport> {
    if x.len() != y.len() {
        return Err(GpkError::Config(format!("fit needs matching lengths, got {} and {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(GpkError::Config(format!("fit needs ≥ 3 points, got {}", x.len())));
    }
    if let Some(v) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(GpkError::Domain(format!("fit values must be positive and finite, got {v}")));
    }
    if let Some(v) = x.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(GpkError::Domain(format!("fit abscissae must be positive and finite, got {v}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(GpkError::Config("fit abscissae must not all coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateReport { x: x.to_vec(), y: y.to_vec(), slope, intercept, r_squared })
}
