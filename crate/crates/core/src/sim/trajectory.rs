//! Ground-truth trajectories and noisy odometry.

use nalgebra::{SMatrix, Vector2, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::metrics::lie::{so3, PoseGroup, PoseWithCov, Se2, Se3};
use crate::metrics::odometry::{Odometry2, Odometry3};

use super::{NoiseSpec, TrajectoryKind};

pub const CIRCLE_RADIUS: f64 = 10.0;
pub const TURN_PROBABILITY: f64 = 0.25;

/// Planar ground-truth poses, starting at the origin facing +x.
pub fn planar_path(kind: TrajectoryKind, n: usize, rng: &mut ChaCha8Rng) -> Vec<Se2> {
    let mut out = Vec::with_capacity(n);
    match kind {
        TrajectoryKind::Line => {
            for i in 0..n {
                out.push(Se2::new(i as f64, 0.0, 0.0));
            }
        }
        TrajectoryKind::Circle => {
            for i in 0..n {
                let th = std::f64::consts::TAU * i as f64 / n.max(1) as f64;
                out.push(Se2::new(
                    CIRCLE_RADIUS * th.sin(),
                    CIRCLE_RADIUS * (1.0 - th.cos()),
                    th,
                ));
            }
        }
        TrajectoryKind::Manhattan => {
            let mut p = Se2::identity();
            for i in 0..n {
                if i > 0 {
                    let mut th = p.theta;
                    if rng.random_bool(TURN_PROBABILITY) {
                        th += if rng.random_bool(0.5) { 1.0 } else { -1.0 } * std::f64::consts::FRAC_PI_2;
                    }
                    p = Se2::new(p.t.x + th.cos(), p.t.y + th.sin(), th);
                }
                out.push(p);
            }
        }
    }
    out
}

/// Odometry whose steps are the true steps perturbed by the noise model,
/// with that model as the step covariance.
pub fn noisy_odometry2(truth: &[Se2], noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> Odometry2 {
    let (st, sr) = (noise.odometry_trans_std, noise.odometry_rot_std);
    let cov = SMatrix::<f64, 3, 3>::from_diagonal(&Vector3::new(st * st, st * st, sr * sr));
    let nt = Normal::new(0.0, st).expect("finite std");
    let nr = Normal::new(0.0, sr).expect("finite std");
    let steps = truth
        .windows(2)
        .map(|w| {
            let mut s = w[0].inverse().compose(&w[1]);
            if noise.sample {
                let d = Vector3::new(nt.sample(rng), nt.sample(rng), nr.sample(rng));
                s = s.perturb(&d);
            }
            PoseWithCov::new(s, cov)
        })
        .collect();
    Odometry2::from_steps(truth.first().copied().unwrap_or_else(Se2::identity), steps)
}

pub fn noisy_odometry3(truth: &[Se3], noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> Odometry3 {
    let (st, sr) = (noise.odometry_trans_std, noise.odometry_rot_std);
    let mut diag = SMatrix::<f64, 6, 1>::zeros();
    for i in 0..3 {
        diag[i] = st * st;
        diag[i + 3] = sr * sr;
    }
    let cov = SMatrix::<f64, 6, 6>::from_diagonal(&diag);
    let nt = Normal::new(0.0, st).expect("finite std");
    let nr = Normal::new(0.0, sr).expect("finite std");
    let steps = truth
        .windows(2)
        .map(|w| {
            let mut s = w[0].inverse().compose(&w[1]);
            if noise.sample {
                let d = SMatrix::<f64, 6, 1>::from_fn(|i, _| if i < 3 { nt.sample(rng) } else { nr.sample(rng) });
                s = s.perturb(&d);
            }
            PoseWithCov::new(s, cov)
        })
        .collect();
    Odometry3::from_steps(truth.first().copied().unwrap_or_else(Se3::identity), steps)
}

/// Grid walk with unit steps inside `[0, size]²`, turning back at the
/// walls, with a bounded vertical random walk.
pub fn manhattan_3d(n: usize, size: f64, start: Vector2<f64>, rng: &mut ChaCha8Rng) -> Vec<Se3> {
    let mut out = Vec::with_capacity(n);
    let mut pos = Vector3::new(start.x, start.y, rng.random_range(0.0..1.0));
    let mut heading = (rng.random_range(0..4) as f64) * std::f64::consts::FRAC_PI_2;
    for i in 0..n {
        if i > 0 {
            if rng.random_bool(TURN_PROBABILITY) {
                heading += if rng.random_bool(0.5) { 1.0 } else { -1.0 } * std::f64::consts::FRAC_PI_2;
            }
            let mut next = pos + Vector3::new(heading.cos(), heading.sin(), 0.0);
            if next.x < 0.0 || next.x > size || next.y < 0.0 || next.y > size {
                heading += std::f64::consts::PI;
                next = pos + Vector3::new(heading.cos(), heading.sin(), 0.0);
            }
            next.z = (pos.z + rng.random_range(-0.1..0.1)).clamp(0.0, 1.0);
            pos = next;
        }
        out.push(Se3::new(pos, so3::exp(&Vector3::new(0.0, 0.0, heading))));
    }
    out
}
