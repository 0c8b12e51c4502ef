//! Seeded synthetic worlds and the scoring used to evaluate selections.
//!
//! Every generator draws from one `ChaCha8Rng` seeded with the spec's
//! seed, so a spec regenerates bit-identical measurement sets.

mod one_d;
mod planted;
mod range;
pub mod trajectory;
mod visual;

use std::time::{Duration, Instant};

use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::consistency::{build_graph_batch, BuildError, BuildOptions};
use crate::maxclique::{SolveError, SolverOptions, SolverRegistry};
use crate::metrics::lie::{so3, wrap_angle, PoseGroup, Se2, Se3};
use crate::metrics::measurement::Measurement;
use crate::metrics::visual::angles_jac;
use crate::metrics::{ConsistencyProblem, MetricConfig, MetricError, MetricRegistry};

pub use one_d::gen_1d_world;
pub use planted::{gen_planted_clique_graph, PlantedGraph};
pub use range::gen_range_world;
pub use visual::gen_visual_world;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid world spec: {0}")]
    InvalidSpec(String),
    #[error("only {found} candidate measurement pairs after {attempts} attempts, need {needed}")]
    NotEnoughCandidates {
        found: usize,
        needed: usize,
        attempts: usize,
    },
    #[error("selected index {index} out of range for {len} measurements")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorldKind {
    OneD,
    Range2d,
    Visual3d,
    PlantedClique,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrajectoryKind {
    Manhattan,
    Circle,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Per-axis translation std of one odometry step (m).
    pub odometry_trans_std: f64,
    /// Per-axis rotation std of one odometry step (rad).
    pub odometry_rot_std: f64,
    /// Std of a range or a 1D observation.
    pub measurement_std: f64,
    /// Std of the azimuth, elevation and each rotation axis of a visual
    /// measurement (rad).
    pub angle_std: f64,
    /// When false, measurements and odometry are exact while the stated
    /// covariances stay as above.
    pub sample: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            odometry_trans_std: 0.02,
            odometry_rot_std: 0.002,
            measurement_std: 0.05,
            angle_std: 0.01,
            sample: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutlierSpec {
    /// Single outliers with a random mean (or random direction and rotation).
    pub n_random: usize,
    /// Outliers generated in mutually consistent clusters.
    pub n_clustered: usize,
    pub cluster_size: usize,
}

impl OutlierSpec {
    /// Half clustered in groups of five, half random, as in the range
    /// experiments.
    pub fn split(total: usize) -> Self {
        let n_clustered = (total / 2) / 5 * 5;
        Self {
            n_random: total - n_clustered,
            n_clustered,
            cluster_size: 5,
        }
    }

    pub fn total(&self) -> usize {
        self.n_random + self.n_clustered
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub kind: WorldKind,
    pub trajectory: TrajectoryKind,
    /// Poses per robot. In 1D worlds, the number of inlier observations.
    pub n_poses: usize,
    pub n_beacons: usize,
    /// Visual worlds: total inter-robot measurements.
    pub n_measurements: usize,
    pub noise: NoiseSpec,
    pub outliers: OutlierSpec,
    /// Visual worlds: maximum distance between poses that observe each other (m).
    pub proximity: f64,
    /// Visual worlds: side of the square the robots move in (m).
    pub area: f64,
    /// 1D worlds: distance of the aliased cluster from the true state, in
    /// multiples of `measurement_std`. Random when absent.
    pub alias_offset: Option<f64>,
    pub seed: u64,
}

impl WorldSpec {
    pub fn one_d(n_inliers: usize, outliers: OutlierSpec, seed: u64) -> Self {
        Self {
            kind: WorldKind::OneD,
            n_poses: n_inliers,
            outliers,
            seed,
            ..Self::base()
        }
    }

    /// Single-beacon range world: one range per pose, `n_outliers` of them
    /// corrupted.
    pub fn range2d(n_poses: usize, n_outliers: usize, seed: u64) -> Self {
        Self {
            kind: WorldKind::Range2d,
            n_poses,
            outliers: OutlierSpec::split(n_outliers),
            seed,
            ..Self::base()
        }
    }

    /// Two-agent scaleless world. The noise is small enough that the scale
    /// recovery rarely turns negative; at the range-world odometry noise
    /// most inlier pairs have scale uncertainty comparable to the scale.
    pub fn visual3d(seed: u64) -> Self {
        Self {
            kind: WorldKind::Visual3d,
            n_poses: 150,
            n_measurements: 100,
            noise: NoiseSpec {
                odometry_trans_std: 1e-4,
                odometry_rot_std: 1e-5,
                angle_std: 1e-4,
                ..NoiseSpec::default()
            },
            outliers: OutlierSpec {
                n_random: 75,
                n_clustered: 0,
                cluster_size: 1,
            },
            seed,
            ..Self::base()
        }
    }

    fn base() -> Self {
        Self {
            kind: WorldKind::Range2d,
            trajectory: TrajectoryKind::Manhattan,
            n_poses: 75,
            n_beacons: 1,
            n_measurements: 100,
            noise: NoiseSpec::default(),
            outliers: OutlierSpec::default(),
            proximity: 0.5,
            area: 10.0,
            alias_offset: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |s: &str| Err(SimError::InvalidSpec(s.to_string()));
        let n = &self.noise;
        let stds = [n.odometry_trans_std, n.odometry_rot_std, n.measurement_std, n.angle_std];
        if stds.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return bad("noise stds must be positive");
        }
        if self.outliers.n_clustered > 0 && self.outliers.cluster_size == 0 {
            return bad("cluster_size must be at least 1");
        }
        match self.kind {
            WorldKind::Range2d if self.n_beacons == 0 => bad("range worlds need a beacon"),
            WorldKind::Range2d if self.outliers.total() > self.n_poses * self.n_beacons => {
                bad("more outliers than measurements")
            }
            WorldKind::Visual3d if self.outliers.total() > self.n_measurements => bad("more outliers than measurements"),
            WorldKind::Visual3d if !(self.proximity > 0.0 && self.area > 0.0) => bad("proximity and area must be positive"),
            _ => Ok(()),
        }
    }
}

/// Where a range measurement really came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeSource {
    Beacon(usize),
    Phantom(usize),
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    OneD {
        state: f64,
    },
    Range {
        poses: Vec<Se2>,
        beacons: Vec<Vector2<f64>>,
        phantoms: Vec<Vector2<f64>>,
        sources: Vec<RangeSource>,
    },
    Visual {
        poses_a: Vec<Se3>,
        poses_b: Vec<Se3>,
    },
}

/// Measurements, their odometry context, inlier labels and the truth.
#[derive(Debug, Clone)]
pub struct LabeledMeasurementSet {
    pub problem: ConsistencyProblem,
    pub inlier: Vec<bool>,
    pub truth: GroundTruth,
}

impl LabeledMeasurementSet {
    pub fn len(&self) -> usize {
        self.inlier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inlier.is_empty()
    }

    pub fn inlier_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.inlier[i]).collect()
    }

    /// Squared Mahalanobis residual of measurement `i` against the truth,
    /// divided by its degrees of freedom.
    pub fn truth_score(&self, i: usize) -> f64 {
        let m = &self.problem.measurements[i];
        match (m, &self.truth) {
            (Measurement::Scalar(s), GroundTruth::OneD { state }) => (s.value - state).powi(2) / s.variance,
            (Measurement::Range(r), GroundTruth::Range { poses, beacons, .. }) => {
                let b = beacons.get(r.beacon_id).copied().unwrap_or_else(Vector2::zeros);
                let d = (poses[r.pose_index].t - b).norm();
                (r.range - d).powi(2) / r.variance
            }
            (Measurement::Scaleless(z), GroundTruth::Visual { poses_a, poses_b }) => {
                let rel = poses_a[z.from.index].inverse().compose(&poses_b[z.to.index]);
                let (ang, _) = angles_jac(&rel.t);
                let phi = so3::log(&(rel.r.inverse() * z.rotation));
                let e = nalgebra::Vector5::new(
                    wrap_angle(z.azimuth - ang[0]),
                    z.elevation - ang[1],
                    phi.x,
                    phi.y,
                    phi.z,
                );
                crate::metrics::mahalanobis(&e, &z.cov).unwrap_or(f64::INFINITY) / 5.0
            }
            _ => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub tpr: f64,
    pub fpr: f64,
    /// Mean per-dof truth residual of the selected measurements.
    pub selected_set_chi2: Option<f64>,
    pub clique_size: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub phase_times: Vec<(&'static str, Duration)>,
}

/// TPR and FPR of `selected` against the labels. Rates with an empty
/// denominator are 0.
pub fn evaluate_selection(selected: &[usize], set: &LabeledMeasurementSet) -> Result<EvalReport, SimError> {
    let n = set.len();
    let mut chosen = vec![false; n];
    for &i in selected {
        if i >= n {
            return Err(SimError::IndexOutOfRange { index: i, len: n });
        }
        chosen[i] = true;
    }
    let (mut tp, mut fp) = (0, 0);
    for i in 0..n {
        match (chosen[i], set.inlier[i]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            _ => {}
        }
    }
    let pos = set.inlier.iter().filter(|&&l| l).count();
    let neg = n - pos;
    let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let count = chosen.iter().filter(|&&c| c).count();
    let chi2 = (count > 0).then(|| (0..n).filter(|&i| chosen[i]).map(|i| set.truth_score(i)).sum::<f64>() / count as f64);
    Ok(EvalReport {
        tpr: rate(tp, pos),
        fpr: rate(fp, neg),
        selected_set_chi2: chi2,
        clique_size: count,
        true_positives: tp,
        false_positives: fp,
        phase_times: Vec::new(),
    })
}

/// Metric, build and solver settings for [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub metric: String,
    pub config: MetricConfig,
    pub build: BuildOptions,
    pub solver: String,
    pub solver_options: SolverOptions,
}

impl Pipeline {
    pub fn new(metric: &str, solver: &str) -> Self {
        Self {
            metric: metric.to_string(),
            config: MetricConfig::default(),
            build: BuildOptions::default(),
            solver: solver.to_string(),
            solver_options: SolverOptions::default(),
        }
    }
}

/// Builds the consistency graph, solves it and scores the clique.
pub fn run_pipeline(set: &LabeledMeasurementSet, p: &Pipeline) -> Result<(Vec<usize>, EvalReport), SimError> {
    let metrics = MetricRegistry::default();
    let solvers = SolverRegistry::default();
    let metric = metrics.get(&p.metric)?;
    let solver = solvers.get(&p.solver)?;
    let t0 = Instant::now();
    let family = metric.family(&set.problem, &p.config)?;
    let (graph, _) = build_graph_batch(&family, &p.build)?;
    let t_build = t0.elapsed();
    let t1 = Instant::now();
    let clique = solver.solve(&graph, &p.solver_options)?;
    let t_solve = t1.elapsed();
    let mut report = evaluate_selection(&clique.vertices, set)?;
    report.phase_times = vec![("build", t_build), ("solve", t_solve)];
    Ok((clique.vertices, report))
}

/// Runs `f` once per seed, over `threads` workers; results keep seed order.
pub fn run_seeds<T, F>(seeds: std::ops::Range<u64>, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Send + Sync,
{
    if threads <= 1 {
        return seeds.map(f).collect();
    }
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| seeds.into_par_iter().map(&f).collect()),
        Err(_) => seeds.map(f).collect(),
    }
}

/// Outlier std: log-uniform in `[0.5, 5]` times the inlier std.
pub(crate) fn outlier_std(base: f64, rng: &mut ChaCha8Rng) -> f64 {
    base * (rng.random_range(0.5f64.ln()..5f64.ln())).exp()
}

/// Uniformly random rotation.
pub(crate) fn random_rotation(rng: &mut ChaCha8Rng) -> nalgebra::Rotation3<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let q = nalgebra::Vector4::from_fn(|_, _| StandardNormal.sample(rng));
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    q.to_rotation_matrix()
}

/// Uniformly random unit direction as (azimuth, elevation).
pub(crate) fn random_direction(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let az = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let el = rng.random_range(-1.0f64..1.0).asin();
    (az, el)
}


/// Fraction of inliers placed in a clique whose majority true beacon is
/// their own. Cliques are vertex lists over `set`.
pub fn association_accuracy(cliques: &[Vec<usize>], set: &LabeledMeasurementSet) -> f64 {
    let GroundTruth::Range { sources, .. } = &set.truth else {
        return 0.0;
    };
    let mut correct = 0;
    for c in cliques {
        let mut votes = std::collections::BTreeMap::new();
        for &v in c {
            if let RangeSource::Beacon(b) = sources[v] {
                *votes.entry(b).or_insert(0usize) += 1;
            }
        }
        let Some((&major, _)) = votes.iter().max_by_key(|(b, n)| (**n, std::cmp::Reverse(**b))) else {
            continue;
        };
        correct += c.iter().filter(|&&v| set.inlier[v] && sources[v] == RangeSource::Beacon(major)).count();
    }
    let total = set.inlier.iter().filter(|&&l| l).count();
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

pub fn generate(spec: &WorldSpec) -> Result<LabeledMeasurementSet, SimError> {
    match spec.kind {
        WorldKind::OneD => gen_1d_world(spec),
        WorldKind::Range2d => gen_range_world(spec),
        WorldKind::Visual3d => gen_visual_world(spec),
        WorldKind::PlantedClique => Err(SimError::InvalidSpec(
            "planted-clique worlds are graphs; use gen_planted_clique_graph".into(),
        )),
    }
}
