use nalgebra::Vector2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::metrics::measurement::{Measurement, RangeMeasurement, Trajectory};
use crate::metrics::ConsistencyProblem;

use super::trajectory::{noisy_odometry2, planar_path};
use super::{outlier_std, GroundTruth, LabeledMeasurementSet, RangeSource, SimError, WorldKind, WorldSpec};

/// Margin around the trajectory's bounding box where beacons and phantom
/// beacons are placed (m).
pub const WORKSPACE_MARGIN: f64 = 10.0;

/// A robot ranging to static beacons from every pose. Corrupted
/// measurements are either clusters of true ranges to a phantom beacon
/// (mutually consistent) or single ranges drawn around a random mean.
/// Measurements are ordered by pose, then beacon.
pub fn gen_range_world(spec: &WorldSpec) -> Result<LabeledMeasurementSet, SimError> {
    spec.validate()?;
    if spec.kind != WorldKind::Range2d {
        return Err(SimError::InvalidSpec("expected a range2d spec".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = planar_path(spec.trajectory, spec.n_poses, &mut rng);
    let odometry = noisy_odometry2(&truth, &spec.noise, &mut rng);

    let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
    for p in &truth {
        lo = lo.inf(&p.t);
        hi = hi.sup(&p.t);
    }
    lo -= Vector2::repeat(WORKSPACE_MARGIN);
    hi += Vector2::repeat(WORKSPACE_MARGIN);
    let max_range = (hi - lo).norm();
    let place = |rng: &mut ChaCha8Rng| Vector2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
    let beacons: Vec<Vector2<f64>> = (0..spec.n_beacons).map(|_| place(&mut rng)).collect();

    let sigma = spec.noise.measurement_std;
    let noisy = |d: f64, sd: f64, rng: &mut ChaCha8Rng| {
        let r = if spec.noise.sample {
            Normal::new(d, sd).expect("finite std").sample(rng)
        } else {
            d
        };
        r.abs()
    };

    let nb = spec.n_beacons;
    let mut source: Vec<RangeSource> = (0..spec.n_poses * nb).map(|s| RangeSource::Beacon(s % nb)).collect();
    let mut ranges: Vec<(f64, f64)> = Vec::with_capacity(source.len());
    for (s, src) in source.iter().enumerate() {
        let RangeSource::Beacon(b) = src else { unreachable!() };
        let d = (truth[s / nb].t - beacons[*b]).norm();
        ranges.push((noisy(d, sigma, &mut rng), sigma * sigma));
    }

    let mut phantoms = Vec::new();
    let mut left = spec.outliers.n_clustered;
    while left > 0 {
        let size = left.min(spec.outliers.cluster_size);
        left -= size;
        let mut beacon_order: Vec<usize> = (0..nb).collect();
        beacon_order.shuffle(&mut rng);
        let phantom = place(&mut rng);
        let id = phantoms.len();
        phantoms.push(phantom);
        let mut placed = false;
        for b in beacon_order {
            let mut free: Vec<usize> = (0..spec.n_poses)
                .map(|p| p * nb + b)
                .filter(|&s| matches!(source[s], RangeSource::Beacon(_)))
                .collect();
            if free.len() < size {
                continue;
            }
            free.shuffle(&mut rng);
            for &s in &free[..size] {
                let d = (truth[s / nb].t - phantom).norm();
                ranges[s] = (noisy(d, sigma, &mut rng), sigma * sigma);
                source[s] = RangeSource::Phantom(id);
            }
            placed = true;
            break;
        }
        if !placed {
            return Err(SimError::InvalidSpec("cluster does not fit in the remaining measurements".into()));
        }
    }
    let mut free: Vec<usize> = (0..source.len())
        .filter(|&s| matches!(source[s], RangeSource::Beacon(_)))
        .collect();
    free.shuffle(&mut rng);
    for &s in free.iter().take(spec.outliers.n_random) {
        let mean = rng.random_range(0.0..max_range);
        let sd = outlier_std(sigma, &mut rng);
        ranges[s] = (noisy(mean, sd, &mut rng), sd * sd);
        source[s] = RangeSource::Random;
    }

    let measurements = ranges
        .iter()
        .enumerate()
        .map(|(s, &(range, variance))| {
            Measurement::Range(RangeMeasurement {
                pose_index: s / nb,
                beacon_id: s % nb,
                range,
                variance,
            })
        })
        .collect();
    Ok(LabeledMeasurementSet {
        problem: ConsistencyProblem::new(measurements, vec![Trajectory::Se2(odometry)]),
        inlier: source.iter().map(|s| matches!(s, RangeSource::Beacon(_))).collect(),
        truth: GroundTruth::Range {
            poses: truth,
            beacons,
            phantoms,
            sources: source,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TrajectoryKind;

    #[test]
    fn counts_and_labels() {
        let w = gen_range_world(&WorldSpec::range2d(75, 60, 7)).unwrap();
        assert_eq!(w.len(), 75);
        assert_eq!(w.inlier.iter().filter(|&&l| l).count(), 15);
        let GroundTruth::Range { sources, phantoms, .. } = &w.truth else { panic!() };
        assert_eq!(sources.iter().filter(|s| matches!(s, RangeSource::Phantom(_))).count(), 30);
        assert_eq!(phantoms.len(), 6);
        let again = gen_range_world(&WorldSpec::range2d(75, 60, 7)).unwrap();
        assert_eq!(again.problem.measurements, w.problem.measurements);
    }

    #[test]
    fn noiseless_inliers_match_truth() {
        let mut spec = WorldSpec::range2d(20, 0, 1);
        spec.trajectory = TrajectoryKind::Circle;
        spec.n_beacons = 2;
        spec.noise.sample = false;
        let w = gen_range_world(&spec).unwrap();
        assert_eq!(w.len(), 40);
        for i in 0..w.len() {
            assert!(w.truth_score(i) < 1e-20);
        }
    }

    #[test]
    fn too_many_outliers_rejected() {
        assert!(matches!(gen_range_world(&WorldSpec::range2d(10, 11, 0)), Err(SimError::InvalidSpec(_))));
    }
}
