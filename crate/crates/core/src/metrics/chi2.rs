//! Chi-squared quantiles for Mahalanobis gating.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use super::MetricError;

pub fn chi2_cdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(dof as f64 / 2.0, x / 2.0)
}

pub fn chi2_pdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = dof as f64 / 2.0;
    ((h - 1.0) * x.ln() - x / 2.0 - h * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// Inverse CDF of the chi-squared distribution with `dof` degrees of freedom.
pub fn chi2_quantile(dof: usize, confidence: f64) -> Result<f64, MetricError> {
    if dof == 0 {
        return Err(MetricError::InvalidDof);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(MetricError::InvalidConfidence(confidence));
    }
    let dist = ChiSquared::new(dof as f64).map_err(|_| MetricError::InvalidDof)?;
    Ok(dist.inverse_cdf(confidence))
}
