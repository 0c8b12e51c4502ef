use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::metrics::measurement::{Measurement, ScalarMeasurement};
use crate::metrics::ConsistencyProblem;

use super::{outlier_std, GroundTruth, LabeledMeasurementSet, SimError, WorldSpec};

/// Half-width of the window outlier means are drawn from, in inlier stds.
const SPREAD: f64 = 100.0;

/// Direct observations of one scalar state: inliers around the state, one
/// aliased cluster around a wrong value and random single outliers. The
/// measurement order is shuffled.
pub fn gen_1d_world(spec: &WorldSpec) -> Result<LabeledMeasurementSet, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma = spec.noise.measurement_std;
    let state = rng.random_range(-10.0..10.0);
    let draw = |mean: f64, sd: f64, rng: &mut ChaCha8Rng| {
        if spec.noise.sample {
            Normal::new(mean, sd).expect("finite std").sample(rng)
        } else {
            mean
        }
    };
    let mut items: Vec<(ScalarMeasurement, bool)> = Vec::new();
    for _ in 0..spec.n_poses {
        items.push((ScalarMeasurement { value: draw(state, sigma, &mut rng), variance: sigma * sigma }, true));
    }
    if spec.outliers.n_clustered > 0 {
        let offset = match spec.alias_offset {
            Some(o) => o,
            None => rng.random_range(10.0..SPREAD) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        };
        let alias = state + offset * sigma;
        for _ in 0..spec.outliers.n_clustered {
            items.push((ScalarMeasurement { value: draw(alias, sigma, &mut rng), variance: sigma * sigma }, false));
        }
    }
    for _ in 0..spec.outliers.n_random {
        let mean = state + rng.random_range(-SPREAD..SPREAD) * sigma;
        let sd = outlier_std(sigma, &mut rng);
        items.push((ScalarMeasurement { value: draw(mean, sd, &mut rng), variance: sd * sd }, false));
    }
    items.shuffle(&mut rng);
    Ok(LabeledMeasurementSet {
        problem: ConsistencyProblem::new(items.iter().map(|(m, _)| Measurement::Scalar(*m)).collect(), vec![]),
        inlier: items.iter().map(|(_, l)| *l).collect(),
        truth: GroundTruth::OneD { state },
    })
}
