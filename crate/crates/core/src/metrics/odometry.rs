//! Dead-reckoned trajectories with constant-time segment covariances.
//!
//! The relative pose between any two trajectory poses is the composition of
//! the odometry steps between them, each step independent. Step covariances
//! are mapped into a shared world frame once, so a segment covariance is a
//! difference of prefix sums instead of a chain of compositions.

use nalgebra::SMatrix;

use super::lie::{PoseGroup, PoseWithCov, Se2, Se3};

#[derive(Debug, Clone)]
pub struct Odometry<G: PoseGroup<D>, const D: usize> {
    poses: Vec<G>,
    steps: Vec<PoseWithCov<G, D>>,
    /// `prefix[i] = Σ_{t<i} H_t Q_t H_tᵀ`.
    prefix: Vec<SMatrix<f64, D, D>>,
}

pub type Odometry2 = Odometry<Se2, 3>;
pub type Odometry3 = Odometry<Se3, 6>;

impl<G: PoseGroup<D>, const D: usize> Odometry<G, D> {
    /// Integrates `steps` from `start`; pose `i+1` is pose `i ⊕ steps[i]`.
    pub fn from_steps(start: G, steps: Vec<PoseWithCov<G, D>>) -> Self {
        let mut poses = Vec::with_capacity(steps.len() + 1);
        let mut prefix = Vec::with_capacity(steps.len() + 1);
        poses.push(start);
        prefix.push(SMatrix::zeros());
        for s in &steps {
            let prev = *poses.last().unwrap();
            let next = prev.compose(&s.pose);
            let h = G::world_step_map(&prev, &next);
            let acc = prefix.last().unwrap() + h * s.cov * h.transpose();
            poses.push(next);
            prefix.push(acc);
        }
        Self {
            poses,
            steps,
            prefix,
        }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn pose(&self, i: usize) -> &G {
        &self.poses[i]
    }

    pub fn poses(&self) -> &[G] {
        &self.poses
    }

    pub fn steps(&self) -> &[PoseWithCov<G, D>] {
        &self.steps
    }

    /// Relative pose `x_a⁻¹ ⊕ x_b` with the covariance of the odometry
    /// between the two poses. Either order is allowed.
    pub fn segment(&self, a: usize, b: usize) -> PoseWithCov<G, D> {
        if a > b {
            return self.segment(b, a).invert();
        }
        let (xa, xb) = (&self.poses[a], &self.poses[b]);
        let bp = G::world_point_map(xb);
        let world = bp * (self.prefix[b] - self.prefix[a]) * bp.transpose();
        let d = G::world_to_relative(xa, xb);
        let cov = d * world * d.transpose();
        PoseWithCov::new(xa.inverse().compose(xb), 0.5 * (cov + cov.transpose()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::lie::so3;
    use nalgebra::{SVector, Vector3};

    fn spd<const D: usize>(seed: u64) -> SMatrix<f64, D, D> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = SMatrix::<f64, D, D>::from_fn(|_, _| next() * 0.2);
        a * a.transpose() + SMatrix::<f64, D, D>::identity() * 1e-3
    }

    fn chain<G: PoseGroup<D>, const D: usize>(odo: &Odometry<G, D>, a: usize, b: usize) -> PoseWithCov<G, D> {
        let mut acc = PoseWithCov::exact(G::identity());
        for s in &odo.steps()[a..b] {
            acc = acc.compose(s);
        }
        acc
    }

    #[test]
    fn se2_segments_match_sequential_compounding() {
        let steps: Vec<_> = (0..12)
            .map(|i| {
                let f = i as f64;
                PoseWithCov::new(Se2::new(1.0 + 0.1 * f, 0.3 * (f * 0.7).sin(), 0.4 * (f * 1.3).cos()), spd::<3>(i + 1))
            })
            .collect();
        let odo = Odometry2::from_steps(Se2::new(3.0, -2.0, 0.9), steps);
        for (a, b) in [(0, 12), (2, 7), (5, 6), (4, 4), (1, 11)] {
            let seg = odo.segment(a, b);
            let oracle = chain(&odo, a, b);
            assert!((seg.cov - oracle.cov).norm() < 1e-9 * (1.0 + oracle.cov.norm()), "{a}->{b}");
            let rel = odo.pose(a).inverse().compose(odo.pose(b));
            assert!((seg.pose.difference(&rel)).norm() < 1e-12);
            assert!((oracle.pose.difference(&rel)).norm() < 1e-9);
        }
        let back = odo.segment(7, 2);
        let oracle = chain(&odo, 2, 7).invert();
        assert!((back.cov - oracle.cov).norm() < 1e-9);
    }

    #[test]
    fn se3_segments_match_sequential_compounding() {
        let steps: Vec<_> = (0..10)
            .map(|i| {
                let f = i as f64;
                let r = so3::exp(&Vector3::new(0.2 * f.sin(), -0.3 * f.cos(), 0.25));
                PoseWithCov::new(Se3::new(Vector3::new(1.0, 0.2 * f, -0.1), r), spd::<6>(i + 7))
            })
            .collect();
        let start = Se3::new(Vector3::new(1.0, 2.0, 3.0), so3::exp(&Vector3::new(0.5, 0.1, -1.0)));
        let odo = Odometry3::from_steps(start, steps);
        for (a, b) in [(0, 10), (3, 8), (9, 10)] {
            let seg = odo.segment(a, b);
            let oracle = chain(&odo, a, b);
            assert!((seg.cov - oracle.cov).norm() < 1e-9 * (1.0 + oracle.cov.norm()), "{a}->{b}");
        }
        let z: SVector<f64, 6> = odo.segment(4, 4).cov.column(0).into();
        assert!(z.norm() < 1e-12);
    }
}
