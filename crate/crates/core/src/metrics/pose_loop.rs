//! Pairwise loop consistency of inter-robot relative-pose measurements.
//!
//! Two measurements `z_ik` (robot a pose i to robot b pose k) and `z_jl`
//! close the loop `(⊖z_ik) ⊕ x_ij ⊕ z_jl ⊕ x_lk` through each robot's
//! odometry; a consistent pair composes to the identity.

use crate::consistency::{GroupCheck, PairwiseScore, Verdict};

use super::lie::{PoseGroup, PoseWithCov};
use super::measurement::RelPoseMeasurement;
use super::odometry::Odometry;
use super::{mahalanobis, MetricError};

/// Squared Mahalanobis norm of the loop error.
pub fn pairwise_pose_metric<G: PoseGroup<D>, const D: usize>(
    z_ik: &PoseWithCov<G, D>,
    z_jl: &PoseWithCov<G, D>,
    x_ij: &PoseWithCov<G, D>,
    x_lk: &PoseWithCov<G, D>,
) -> Result<f64, MetricError> {
    let lp = z_ik.invert().compose(x_ij).compose(z_jl).compose(x_lk);
    let r = lp.pose.residual();
    let j = lp.pose.residual_jacobian();
    mahalanobis(&r, &(j * lp.cov * j.transpose()))
}

/// Loop scores for measurements between two robots' trajectories.
pub struct PoseLoopScores<'a, G: PoseGroup<D>, const D: usize> {
    pub measurements: Vec<RelPoseMeasurement<PoseWithCov<G, D>>>,
    /// Indexed by robot id.
    pub odometry: Vec<&'a Odometry<G, D>>,
    pub gamma: f64,
}

impl<G: PoseGroup<D>, const D: usize> PoseLoopScores<'_, G, D> {
    pub fn directed(&self, u: usize, v: usize) -> Result<f64, MetricError> {
        let zu = &self.measurements[u];
        let mut zv = self.measurements[v];
        if zv.from.robot != zu.from.robot {
            zv = RelPoseMeasurement {
                from: zv.to,
                to: zv.from,
                value: zv.value.invert(),
            };
        }
        if zv.to.robot != zu.to.robot {
            return Err(MetricError::MissingContext("measurements join different robots"));
        }
        let odo = |r: usize| {
            self.odometry
                .get(r)
                .copied()
                .ok_or(MetricError::MissingContext("trajectory for robot"))
        };
        let x_ij = odo(zu.from.robot)?.segment(zu.from.index, zv.from.index);
        let x_lk = odo(zu.to.robot)?.segment(zv.to.index, zu.to.index);
        pairwise_pose_metric(&zu.value, &zv.value, &x_ij, &x_lk)
    }
}

impl<G: PoseGroup<D>, const D: usize> PairwiseScore for PoseLoopScores<'_, G, D> {
    fn len(&self) -> usize {
        self.measurements.len()
    }
    fn score(&self, u: usize, v: usize) -> f64 {
        self.directed(u, v).unwrap_or(f64::INFINITY)
    }
}

impl<G: PoseGroup<D>, const D: usize> GroupCheck for PoseLoopScores<'_, G, D> {
    fn order(&self) -> usize {
        2
    }
    /// Both directions must pass; the reported score is the larger one.
    fn check(&self, t: &[usize]) -> Verdict {
        let s = self.score(t[0], t[1]).max(self.score(t[1], t[0]));
        Verdict::gate(s, self.gamma)
    }
}
