//! Two classical scalar-model formulas for the effect of environmental noise
//! on growth, one on each scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandeParams {
    pub lambda_bar: f64,
    pub r_bar: f64,
    pub sigma_r_sq: f64,
    pub eps_bar: f64,
    pub sigma_eps_sq: f64,
}

impl LandeParams {
    pub fn new(lambda_bar: f64, r_bar: f64, sigma_r_sq: f64, eps_bar: f64, sigma_eps_sq: f64) -> Result<Self> {
        if lambda_bar.is_nan() || lambda_bar <= 0.0 {
            return Err(Error::InvalidArgument(format!("lambda_bar = {lambda_bar} must be positive")));
        }
        if [sigma_r_sq, sigma_eps_sq].iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidArgument("variances must be non-negative".into()));
        }
        if ![r_bar, eps_bar, sigma_r_sq, sigma_eps_sq].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        Ok(Self { lambda_bar, r_bar, sigma_r_sq, eps_bar, sigma_eps_sq })
    }
}

/// `r̄ ≈ log λ̄ - σ_r²`, noise added on the arithmetic scale.
///
/// This is the displayed approximation taken as written. The usual
/// second-order expansion of `E log(λ̄ + ε)` gives `log λ̄ - σ²/(2λ̄²)`;
/// [`log_growth_quadrature`] evaluates the exact expectation for comparison.
pub fn lande_log_scale_mean(lp: &LandeParams) -> f64 {
    lp.lambda_bar.ln() - lp.sigma_r_sq
}

/// `λ̄ = exp(r̄ + ε̄ + σ_ε²/2)`, exact for Normal `ε` on the log scale.
pub fn lande_arithmetic_mean(lp: &LandeParams) -> f64 {
    (lp.r_bar + lp.eps_bar + lp.sigma_eps_sq / 2.0).exp()
}

/// `E log(λ̄ + ε)` for `ε ~ N(0, variance)`, by composite Simpson quadrature
/// over `±8` standard deviations. The integrand must stay positive there.
pub fn log_growth_quadrature(lambda_bar: f64, variance: f64) -> Result<f64> {
    if variance.is_nan() || variance < 0.0 || lambda_bar.is_nan() || lambda_bar <= 0.0 {
        return Err(Error::InvalidArgument("need lambda_bar > 0 and variance >= 0".into()));
    }
    if variance == 0.0 {
        return Ok(lambda_bar.ln());
    }
    let sd = variance.sqrt();
    if lambda_bar - 8.0 * sd <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda_bar = {lambda_bar} is within 8 sd of zero; log(λ̄ + ε) is undefined with non-negligible mass"
        )));
    }
    const INTERVALS: usize = 4000;
    let (a, b) = (-8.0, 8.0);
    let h = (b - a) / INTERVALS as f64;
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let g = |z: f64| phi(z) * (lambda_bar + sd * z).ln();
    let mut sum = g(a) + g(b);
    for k in 1..INTERVALS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * g(a + k as f64 * h);
    }
    Ok(sum * h / 3.0)
}
