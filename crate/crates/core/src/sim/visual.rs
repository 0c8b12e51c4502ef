use nalgebra::{Matrix5, Vector2, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::metrics::lie::{so3, wrap_angle, PoseGroup, Se3};
use crate::metrics::measurement::{Endpoint, Measurement, ScalelessRelPoseMeasurement, Trajectory};
use crate::metrics::visual::angles_jac;
use crate::metrics::ConsistencyProblem;

use super::trajectory::{manhattan_3d, noisy_odometry3};
use super::{outlier_std, random_direction, random_rotation, GroundTruth, LabeledMeasurementSet, SimError, WorldKind, WorldSpec};

/// Attempts at drawing trajectories with enough close pose pairs.
pub const MAX_ATTEMPTS: usize = 20;

fn observe(a: &Se3, b: &Se3, sd: f64, sample: bool, rng: &mut ChaCha8Rng) -> (f64, f64, nalgebra::Rotation3<f64>) {
    let rel = a.inverse().compose(b);
    let (ang, _) = angles_jac(&rel.t);
    if !sample {
        return (ang[0], ang[1], rel.r);
    }
    let n = Normal::new(0.0, sd).expect("finite std");
    let phi = Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng));
    let el = (ang[1] + n.sample(rng)).clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    (wrap_angle(ang[0] + n.sample(rng)), el, rel.r * so3::exp(&phi))
}

/// Two robots on grid walks in a shared square. Inliers relate pose pairs
/// closer than `proximity`; random outliers get a random direction and
/// rotation, clustered outliers observe robot b displaced by a common
/// wrong transform. Ordered by robot-a pose.
pub fn gen_visual_world(spec: &WorldSpec) -> Result<LabeledMeasurementSet, SimError> {
    spec.validate()?;
    if spec.kind != WorldKind::Visual3d {
        return Err(SimError::InvalidSpec("expected a visual3d spec".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_inliers = spec.n_measurements - spec.outliers.total();
    let sd = spec.noise.angle_std;
    let sample = spec.noise.sample;
    let mut found = 0;
    for _ in 0..MAX_ATTEMPTS {
        let start = |rng: &mut ChaCha8Rng| Vector2::new(rng.random_range(0.0..spec.area), rng.random_range(0.0..spec.area));
        let sa = start(&mut rng);
        let sb = start(&mut rng);
        let poses_a = manhattan_3d(spec.n_poses, spec.area, sa, &mut rng);
        let poses_b = manhattan_3d(spec.n_poses, spec.area, sb, &mut rng);
        let mut candidates = Vec::new();
        for (i, a) in poses_a.iter().enumerate() {
            for (l, b) in poses_b.iter().enumerate() {
                if (a.t - b.t).norm() <= spec.proximity {
                    candidates.push((i, l));
                }
            }
        }
        found = candidates.len();
        if found < n_inliers {
            continue;
        }
        candidates.shuffle(&mut rng);
        let cov = Matrix5::identity() * sd * sd;
        let mut items: Vec<(ScalelessRelPoseMeasurement, bool)> = Vec::with_capacity(spec.n_measurements);
        let make = |i: usize, l: usize, obs: (f64, f64, nalgebra::Rotation3<f64>), cov: Matrix5<f64>| ScalelessRelPoseMeasurement {
            from: Endpoint::new(0, i),
            to: Endpoint::new(1, l),
            azimuth: obs.0,
            elevation: obs.1,
            rotation: obs.2,
            cov,
        };
        for &(i, l) in &candidates[..n_inliers] {
            let obs = observe(&poses_a[i], &poses_b[l], sd, sample, &mut rng);
            items.push((make(i, l, obs, cov), true));
        }
        let n = spec.n_poses;
        let mut left = spec.outliers.n_clustered;
        while left > 0 {
            let size = left.min(spec.outliers.cluster_size.max(1));
            left -= size;
            let wrong = Se3::new(
                Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-0.5..0.5)),
                random_rotation(&mut rng),
            );
            for _ in 0..size {
                let (i, l) = (rng.random_range(0..n), rng.random_range(0..n));
                let b = wrong.compose(&poses_b[l]);
                let obs = observe(&poses_a[i], &b, sd, sample, &mut rng);
                items.push((make(i, l, obs, cov), false));
            }
        }
        for _ in 0..spec.outliers.n_random {
            let (i, l) = (rng.random_range(0..n), rng.random_range(0..n));
            let (az, el) = random_direction(&mut rng);
            let s = outlier_std(sd, &mut rng);
            items.push((make(i, l, (az, el, random_rotation(&mut rng)), Matrix5::identity() * s * s), false));
        }
        items.sort_by_key(|(m, _)| (m.from.index, m.to.index));
        let odo_a = noisy_odometry3(&poses_a, &spec.noise, &mut rng);
        let odo_b = noisy_odometry3(&poses_b, &spec.noise, &mut rng);
        return Ok(LabeledMeasurementSet {
            problem: ConsistencyProblem::new(
                items.iter().map(|(m, _)| Measurement::Scaleless(*m)).collect(),
                vec![Trajectory::Se3(odo_a), Trajectory::Se3(odo_b)],
            ),
            inlier: items.iter().map(|(_, l)| *l).collect(),
            truth: GroundTruth::Visual { poses_a, poses_b },
        });
    }
    Err(SimError::NotEnoughCandidates {
        found,
        needed: n_inliers,
        attempts: MAX_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_world_has_100_measurements() {
        let w = gen_visual_world(&WorldSpec::visual3d(5)).unwrap();
        assert_eq!(w.len(), 100);
        assert_eq!(w.inlier.iter().filter(|&&l| l).count(), 25);
        let again = gen_visual_world(&WorldSpec::visual3d(5)).unwrap();
        assert_eq!(again.problem.measurements, w.problem.measurements);
    }

    #[test]
    fn impossible_proximity_errors() {
        let mut spec = WorldSpec::visual3d(1);
        spec.proximity = 1e-9;
        assert!(matches!(gen_visual_world(&spec), Err(SimError::NotEnoughCandidates { .. })));
    }
}
