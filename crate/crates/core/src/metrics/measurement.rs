//! Measurement kinds and the context they are checked against.

use nalgebra::{Matrix5, Rotation3, Vector3};

use super::lie::{PoseWithCov, Se2, Se3};
use super::odometry::{Odometry2, Odometry3};
use super::MetricError;

/// A trajectory pose: robot id plus pose index along that robot's odometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub robot: usize,
    pub index: usize,
}

impl Endpoint {
    pub fn new(robot: usize, index: usize) -> Self {
        Self { robot, index }
    }
}

/// Direct observation of a scalar state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMeasurement {
    pub value: f64,
    pub variance: f64,
}

/// Relative pose `z` from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelPoseMeasurement<V> {
    pub from: Endpoint,
    pub to: Endpoint,
    pub value: V,
}

pub type RelPose2 = RelPoseMeasurement<PoseWithCov<Se2, 3>>;
pub type RelPose3 = RelPoseMeasurement<PoseWithCov<Se3, 6>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeMeasurement {
    pub pose_index: usize,
    pub beacon_id: usize,
    pub range: f64,
    pub variance: f64,
}

/// Relative rotation plus the direction (but not distance) of the
/// translation, from a pose of robot `from.robot` to a pose of robot
/// `to.robot`. The covariance is over `(α, ε, φ)` with the rotation
/// perturbed on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalelessRelPoseMeasurement {
    pub from: Endpoint,
    pub to: Endpoint,
    pub azimuth: f64,
    pub elevation: f64,
    pub rotation: Rotation3<f64>,
    pub cov: Matrix5<f64>,
}

impl ScalelessRelPoseMeasurement {
    /// Unit direction `(cos α cos ε, sin α cos ε, sin ε)`.
    pub fn direction(&self) -> Vector3<f64> {
        unit_direction(self.azimuth, self.elevation)
    }
}

pub fn unit_direction(az: f64, el: f64) -> Vector3<f64> {
    let (sa, ca) = az.sin_cos();
    let (se, ce) = el.sin_cos();
    Vector3::new(ca * ce, sa * ce, se)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Scalar(ScalarMeasurement),
    RelPose2(RelPose2),
    RelPose3(RelPose3),
    Range(RangeMeasurement),
    Scaleless(ScalelessRelPoseMeasurement),
}

impl Measurement {
    pub fn kind(&self) -> &'static str {
        match self {
            Measurement::Scalar(_) => "scalar",
            Measurement::RelPose2(_) | Measurement::RelPose3(_) => "relpose",
            Measurement::Range(_) => "range",
            Measurement::Scaleless(_) => "bearing_rot",
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        let bad = |s: String| Err(MetricError::InvalidMeasurement(s));
        match self {
            Measurement::Scalar(s) if !(s.variance > 0.0) => bad(format!("variance {}", s.variance)),
            Measurement::Range(r) if !(r.range >= 0.0) => bad(format!("range {}", r.range)),
            Measurement::Range(r) if !(r.variance > 0.0) => bad(format!("variance {}", r.variance)),
            Measurement::Scaleless(s)
                if !(s.elevation.abs() <= std::f64::consts::FRAC_PI_2 && s.azimuth.is_finite()) =>
            {
                bad(format!("elevation {}", s.elevation))
            }
            _ => Ok(()),
        }
    }
}

/// Per-robot odometry supplying the relative poses between measurement
/// endpoints.
#[derive(Debug, Clone)]
pub enum Trajectory {
    Se2(Odometry2),
    Se3(Odometry3),
}

/// Measurements plus the context needed to check them.
#[derive(Debug, Clone, Default)]
pub struct ConsistencyProblem {
    pub measurements: Vec<Measurement>,
    /// Indexed by robot id.
    pub trajectories: Vec<Trajectory>,
}

impl ConsistencyProblem {
    pub fn new(measurements: Vec<Measurement>, trajectories: Vec<Trajectory>) -> Self {
        Self {
            measurements,
            trajectories,
        }
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn odometry2(&self, robot: usize) -> Result<&Odometry2, MetricError> {
        match self.trajectories.get(robot) {
            Some(Trajectory::Se2(o)) => Ok(o),
            _ => Err(MetricError::MissingContext("SE(2) trajectory")),
        }
    }

    pub fn odometry3(&self, robot: usize) -> Result<&Odometry3, MetricError> {
        match self.trajectories.get(robot) {
            Some(Trajectory::Se3(o)) => Ok(o),
            _ => Err(MetricError::MissingContext("SE(3) trajectory")),
        }
    }

    /// Extracts measurements of one kind, failing on the first mismatch.
    pub(crate) fn collect<T: Clone>(
        &self,
        metric: &'static str,
        expected: &'static str,
        pick: impl Fn(&Measurement) -> Option<&T>,
    ) -> Result<Vec<T>, MetricError> {
        self.measurements
            .iter()
            .map(|m| {
                m.validate()?;
                pick(m)
                    .cloned()
                    .ok_or(MetricError::KindMismatch { metric, expected })
            })
            .collect()
    }
}
