//! Name-indexed consistency metrics.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::consistency::CheckFamily;

use super::chi2::chi2_quantile;
use super::lie::{PoseGroup, PoseWithCov};
use super::measurement::{ConsistencyProblem, Measurement, RelPoseMeasurement, Trajectory};
use super::odometry::Odometry;
use super::pose_loop::PoseLoopScores;
use super::range::{RangeChecks, RangeOrder, RangeSettings};
use super::scalar::ScalarPairs;
use super::visual::{VisualChecks, VisualSettings};
use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    /// Chi-squared confidence used for every threshold.
    pub confidence: f64,
    /// Tolerance inflation of the range group-2 and group-3 prefilters.
    pub kappa: f64,
    /// Range group-4: pass when any held-out permutation passes.
    pub any_permutation: bool,
    /// Range: ignore beacon ids.
    pub association_mode: bool,
    /// Attach the metric's lower-order checks for hierarchical builds.
    pub lower_orders: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            confidence: 0.95,
            kappa: 3.0,
            any_permutation: false,
            association_mode: false,
            lower_orders: false,
        }
    }
}

/// A consistency metric: the order-k check plus optional lower-order
/// prefilters over a concrete problem.
pub trait ConsistencyMetric: Send + Sync {
    fn name(&self) -> &'static str;
    /// Group size `k` of the top-order check.
    fn order(&self) -> usize;
    /// Measurement kind accepted, as reported by [`Measurement::kind`].
    fn measurement_kind(&self) -> &'static str;
    /// Degrees of freedom of the top-order score.
    fn dof(&self, problem: &ConsistencyProblem) -> usize;

    fn threshold(&self, problem: &ConsistencyProblem, cfg: &MetricConfig) -> Result<f64, MetricError> {
        chi2_quantile(self.dof(problem), cfg.confidence)
    }

    fn family<'a>(
        &self,
        problem: &'a ConsistencyProblem,
        cfg: &MetricConfig,
    ) -> Result<CheckFamily<'a>, MetricError>;
}

pub struct ScalarMetric;

impl ConsistencyMetric for ScalarMetric {
    fn name(&self) -> &'static str {
        "scalar"
    }
    fn order(&self) -> usize {
        2
    }
    fn measurement_kind(&self) -> &'static str {
        "scalar"
    }
    fn dof(&self, _: &ConsistencyProblem) -> usize {
        1
    }
    fn family<'a>(&self, p: &'a ConsistencyProblem, cfg: &MetricConfig) -> Result<CheckFamily<'a>, MetricError> {
        let gamma = self.threshold(p, cfg)?;
        let measurements = p.collect(self.name(), "scalar", |m| match m {
            Measurement::Scalar(s) => Some(s),
            _ => None,
        })?;
        Ok(CheckFamily::new(p.len(), Box::new(ScalarPairs { measurements, gamma }), Some(gamma)))
    }
}

/// Pairwise loop metric over SE(2) or SE(3) relative-pose measurements.
pub struct RelPoseMetric;

fn all_odometry<'a, G: PoseGroup<D>, const D: usize>(
    p: &'a ConsistencyProblem,
    pick: impl Fn(&'a Trajectory) -> Option<&'a Odometry<G, D>>,
) -> Result<Vec<&'a Odometry<G, D>>, MetricError> {
    p.trajectories
        .iter()
        .map(|t| pick(t).ok_or(MetricError::MissingContext("trajectories of one pose group")))
        .collect()
}

fn loop_family<'a, G: PoseGroup<D>, const D: usize>(
    p: &'a ConsistencyProblem,
    measurements: Vec<RelPoseMeasurement<PoseWithCov<G, D>>>,
    odometry: Vec<&'a Odometry<G, D>>,
    gamma: f64,
) -> CheckFamily<'a> {
    let top = PoseLoopScores {
        measurements,
        odometry,
        gamma,
    };
    CheckFamily::new(p.len(), Box::new(top), Some(gamma))
}

impl ConsistencyMetric for RelPoseMetric {
    fn name(&self) -> &'static str {
        "relpose"
    }
    fn order(&self) -> usize {
        2
    }
    fn measurement_kind(&self) -> &'static str {
        "relpose"
    }
    fn dof(&self, p: &ConsistencyProblem) -> usize {
        match p.measurements.first() {
            Some(Measurement::RelPose3(_)) => 6,
            _ => 3,
        }
    }
    fn family<'a>(&self, p: &'a ConsistencyProblem, cfg: &MetricConfig) -> Result<CheckFamily<'a>, MetricError> {
        let gamma = self.threshold(p, cfg)?;
        if self.dof(p) == 6 {
            let ms = p.collect(self.name(), "relpose", |m| match m {
                Measurement::RelPose3(z) => Some(z),
                _ => None,
            })?;
            let odo = all_odometry(p, |t| match t {
                Trajectory::Se3(o) => Some(o),
                _ => None,
            })?;
            Ok(loop_family(p, ms, odo, gamma))
        } else {
            let ms = p.collect(self.name(), "relpose", |m| match m {
                Measurement::RelPose2(z) => Some(z),
                _ => None,
            })?;
            let odo = all_odometry(p, |t| match t {
                Trajectory::Se2(o) => Some(o),
                _ => None,
            })?;
            Ok(loop_family(p, ms, odo, gamma))
        }
    }
}

/// Group-4 range metric along robot 0's SE(2) trajectory, optionally with
/// the group-2 and group-3 prefilters.
pub struct RangeMetric;

fn range_checks<'a>(p: &'a ConsistencyProblem, cfg: &MetricConfig, name: &'static str) -> Result<RangeChecks<'a>, MetricError> {
    let measurements = p.collect(name, "range", |m| match m {
        Measurement::Range(r) => Some(r),
        _ => None,
    })?;
    let odometry = p.odometry2(0)?;
    if let Some(m) = measurements.iter().find(|m| m.pose_index >= odometry.len()) {
        return Err(MetricError::InvalidMeasurement(format!("pose index {} beyond trajectory", m.pose_index)));
    }
    Ok(RangeChecks::new(
        measurements,
        odometry,
        RangeSettings {
            gamma: chi2_quantile(1, cfg.confidence)?,
            kappa: cfg.kappa,
            any_permutation: cfg.any_permutation,
            ignore_beacons: cfg.association_mode,
        },
    ))
}

impl ConsistencyMetric for RangeMetric {
    fn name(&self) -> &'static str {
        "range"
    }
    fn order(&self) -> usize {
        4
    }
    fn measurement_kind(&self) -> &'static str {
        "range"
    }
    fn dof(&self, _: &ConsistencyProblem) -> usize {
        1
    }
    fn family<'a>(&self, p: &'a ConsistencyProblem, cfg: &MetricConfig) -> Result<CheckFamily<'a>, MetricError> {
        let checks = Arc::new(range_checks(p, cfg, self.name())?);
        let gamma = checks.settings.gamma;
        let k2 = cfg.kappa * cfg.kappa;
        let top = RangeOrder {
            checks: checks.clone(),
            order: 4,
        };
        let mut fam = CheckFamily::new(p.len(), Box::new(top), Some(gamma));
        if cfg.lower_orders {
            for (order, thr) in [(2, k2), (3, 3.0 * k2)] {
                let c = RangeOrder {
                    checks: checks.clone(),
                    order,
                };
                fam = fam.with_lower(Box::new(c), Some(thr)).expect("orders below 4");
            }
        }
        Ok(fam)
    }
}

/// The range group-2 check on its own: the pairwise baseline.
pub struct RangePairwiseMetric;

impl ConsistencyMetric for RangePairwiseMetric {
    fn name(&self) -> &'static str {
        "range-pairwise"
    }
    fn order(&self) -> usize {
        2
    }
    fn measurement_kind(&self) -> &'static str {
        "range"
    }
    fn dof(&self, _: &ConsistencyProblem) -> usize {
        1
    }
    /// The gate is `κ²` on the squared normalized annulus violation.
    fn threshold(&self, _: &ConsistencyProblem, cfg: &MetricConfig) -> Result<f64, MetricError> {
        Ok(cfg.kappa * cfg.kappa)
    }
    fn family<'a>(&self, p: &'a ConsistencyProblem, cfg: &MetricConfig) -> Result<CheckFamily<'a>, MetricError> {
        let checks = Arc::new(range_checks(p, cfg, self.name())?);
        let thr = self.threshold(p, cfg)?;
        Ok(CheckFamily::new(p.len(), Box::new(RangeOrder { checks, order: 2 }), Some(thr)))
    }
}

/// Group-3 scaleless visual metric between two SE(3) trajectories.
pub struct VisualMetric;

impl ConsistencyMetric for VisualMetric {
    fn name(&self) -> &'static str {
        "visual"
    }
    fn order(&self) -> usize {
        3
    }
    fn measurement_kind(&self) -> &'static str {
        "bearing_rot"
    }
    fn dof(&self, _: &ConsistencyProblem) -> usize {
        2
    }
    fn family<'a>(&self, p: &'a ConsistencyProblem, cfg: &MetricConfig) -> Result<CheckFamily<'a>, MetricError> {
        let ms = p.collect(self.name(), "bearing_rot", |m| match m {
            Measurement::Scaleless(z) => Some(z),
            _ => None,
        })?;
        let (ra, rb) = ms.first().map(|z| (z.from.robot, z.to.robot)).unwrap_or((0, 1));
        if let Some(z) = ms.iter().find(|z| z.from.robot != ra || z.to.robot != rb) {
            return Err(MetricError::InvalidMeasurement(format!(
                "measurement from robot {} to {} in a set from {ra} to {rb}",
                z.from.robot, z.to.robot
            )));
        }
        let (odometry_a, odometry_b) = (p.odometry3(ra)?, p.odometry3(rb)?);
        let settings = VisualSettings {
            gamma_rotation: chi2_quantile(3, cfg.confidence)?,
            gamma_direction: chi2_quantile(2, cfg.confidence)?,
        };
        let make = |order| VisualChecks {
            measurements: ms.clone(),
            odometry_a,
            odometry_b,
            settings,
            order,
        };
        let fam = CheckFamily::new(p.len(), Box::new(make(3)), Some(settings.gamma_direction));
        if cfg.lower_orders {
            return Ok(fam
                .with_lower(Box::new(make(2)), Some(settings.gamma_rotation))
                .expect("order 2 below 3"));
        }
        Ok(fam)
    }
}

pub struct MetricRegistry {
    metrics: BTreeMap<&'static str, Box<dyn ConsistencyMetric>>,
}

impl MetricRegistry {
    pub fn empty() -> Self {
        Self {
            metrics: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, metric: Box<dyn ConsistencyMetric>) {
        self.metrics.insert(metric.name(), metric);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ConsistencyMetric, MetricError> {
        self.metrics
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| MetricError::UnknownMetric(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.metrics.keys().copied()
    }
}

impl Default for MetricRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ScalarMetric));
        r.register(Box::new(RelPoseMetric));
        r.register(Box::new(RangeMetric));
        r.register(Box::new(RangePairwiseMetric));
        r.register(Box::new(VisualMetric));
        r
    }
}
