//! Consistency metrics and the geometry and statistics behind them.
//!
//! Every metric is a [`registry::ConsistencyMetric`] that turns a
//! [`measurement::ConsistencyProblem`] into a
//! [`crate::consistency::CheckFamily`].

pub mod chi2;
pub mod lie;
pub mod measurement;
pub mod odometry;
pub mod pose_loop;
pub mod range;
pub mod registry;
pub mod scalar;
pub mod trilateration;
pub mod visual;

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

pub use chi2::chi2_quantile;
pub use lie::{Pose2, Pose3, PoseGroup, PoseWithCov, Se2, Se3};
pub use measurement::{ConsistencyProblem, Endpoint, Measurement, Trajectory};
pub use registry::{ConsistencyMetric, MetricConfig, MetricRegistry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("chi-squared degrees of freedom must be at least 1")]
    InvalidDof,
    #[error("confidence must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("covariance is singular or not positive definite")]
    SingularCovariance,
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("circles do not intersect")]
    NoSolution,
    #[error("metric `{metric}` expects {expected} measurements")]
    KindMismatch {
        metric: &'static str,
        expected: &'static str,
    },
    #[error("missing context: {0}")]
    MissingContext(&'static str),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
}

/// Squared Mahalanobis norm `rᵀ Σ⁻¹ r`.
pub fn mahalanobis<const D: usize>(
    r: &SVector<f64, D>,
    cov: &SMatrix<f64, D, D>,
) -> Result<f64, MetricError> {
    let sym = 0.5 * (cov + cov.transpose());
    let chol = sym.cholesky().ok_or(MetricError::SingularCovariance)?;
    let x = chol.solve(r);
    let d = r.dot(&x);
    if d.is_finite() {
        Ok(d.max(0.0))
    } else {
        Err(MetricError::SingularCovariance)
    }
}
