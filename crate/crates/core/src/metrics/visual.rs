//! Consistency of scaleless inter-robot measurements.
//!
//! Each measurement gives the relative rotation between a pose of robot a
//! and a pose of robot b, plus the azimuth and elevation of the direction
//! between them. Pairs are checked with a rotation loop; triples recover
//! the two missing distances from a pair and predict the third direction.

use nalgebra::{Matrix2, Matrix3, Rotation3, SMatrix, Vector2, Vector3};

use crate::consistency::{GroupCheck, Verdict};

use super::lie::{so3, wrap_angle, PoseGroup, PoseWithCov, Se3, Tracked};
use super::measurement::{unit_direction, ScalelessRelPoseMeasurement};
use super::odometry::Odometry3;
use super::{mahalanobis, MetricError};

/// Tracked inputs of a triple: two chained segments per robot (6 each),
/// then `(α, ε, φ)` for each of the three measurements.
pub const TRIPLE_INPUTS: usize = 39;
const N: usize = TRIPLE_INPUTS;
const MEAS_OFFSET: usize = 24;

/// Condition number of the scale system beyond which the directions count
/// as parallel.
pub const SCALE_CONDITION: f64 = 1e6;

type J3 = SMatrix<f64, 3, N>;
type TPose = Tracked<Se3, 6, N>;

#[derive(Debug, Clone, Copy)]
struct TVec {
    v: Vector3<f64>,
    j: J3,
}

#[derive(Debug, Clone, Copy)]
struct TRot {
    r: Rotation3<f64>,
    j: J3,
}

impl TRot {
    fn mul(&self, o: &TRot) -> TRot {
        TRot {
            r: self.r * o.r,
            j: o.r.matrix().transpose() * self.j + o.j,
        }
    }

    fn transpose(&self) -> TRot {
        TRot {
            r: self.r.inverse(),
            j: -self.r.matrix() * self.j,
        }
    }

    fn apply(&self, x: &TVec) -> TVec {
        let m = self.r.matrix();
        TVec {
            v: m * x.v,
            j: m * x.j - m * so3::hat(&x.v) * self.j,
        }
    }
}

fn rot_of(p: &TPose) -> TRot {
    TRot {
        r: p.pose.r,
        j: p.jac.fixed_rows::<3>(3).into_owned(),
    }
}

fn trans_of(p: &TPose) -> TVec {
    TVec {
        v: p.pose.t,
        j: p.jac.fixed_rows::<3>(0).into_owned(),
    }
}

/// Raw values of one scaleless measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalelessValue {
    pub azimuth: f64,
    pub elevation: f64,
    pub rotation: Rotation3<f64>,
}

impl From<&ScalelessRelPoseMeasurement> for ScalelessValue {
    fn from(m: &ScalelessRelPoseMeasurement) -> Self {
        Self {
            azimuth: m.azimuth,
            elevation: m.elevation,
            rotation: m.rotation,
        }
    }
}

/// Gauge-fixed geometry of up to three measurements: each robot's poses are
/// chained from its earliest involved pose.
#[derive(Debug, Clone)]
pub struct TripleFrame {
    pa: [TPose; 3],
    pb: [TPose; 3],
    a_slot: [usize; 3],
    b_slot: [usize; 3],
    dirs: [TVec; 3],
    rots: [TRot; 3],
    obs: [(f64, f64); 3],
}

impl TripleFrame {
    /// `a_segs`/`b_segs` chain each robot's sorted distinct poses; slots give
    /// each measurement's chain position on robot a (`from`) and b (`to`).
    pub fn from_raw(
        a_segs: &[Se3; 2],
        b_segs: &[Se3; 2],
        a_slot: [usize; 3],
        b_slot: [usize; 3],
        meas: &[ScalelessValue; 3],
    ) -> Self {
        let chain = |segs: &[Se3; 2], off: usize| {
            let p0 = TPose::constant(Se3::identity());
            let p1 = p0.compose(&TPose::input(segs[0], off));
            let p2 = p1.compose(&TPose::input(segs[1], off + 6));
            [p0, p1, p2]
        };
        let dirs = std::array::from_fn(|s| {
            let m = &meas[s];
            let col = MEAS_OFFSET + 5 * s;
            let (sa, ca) = m.azimuth.sin_cos();
            let (se, ce) = m.elevation.sin_cos();
            let mut j = J3::zeros();
            j.set_column(col, &Vector3::new(-sa * ce, ca * ce, 0.0));
            j.set_column(col + 1, &Vector3::new(-ca * se, -sa * se, ce));
            TVec {
                v: unit_direction(m.azimuth, m.elevation),
                j,
            }
        });
        let rots = std::array::from_fn(|s| {
            let col = MEAS_OFFSET + 5 * s + 2;
            let mut j = J3::zeros();
            for d in 0..3 {
                j[(d, col + d)] = 1.0;
            }
            TRot {
                r: meas[s].rotation,
                j,
            }
        });
        Self {
            pa: chain(a_segs, 0),
            pb: chain(b_segs, 12),
            a_slot,
            b_slot,
            dirs,
            rots,
            obs: meas.map(|m| (m.azimuth, m.elevation)),
        }
    }

    fn rel_a(&self, s: usize, t: usize) -> TPose {
        self.pa[self.a_slot[s]].inverse().compose(&self.pa[self.a_slot[t]])
    }

    fn rel_b(&self, s: usize, t: usize) -> TPose {
        self.pb[self.b_slot[s]].inverse().compose(&self.pb[self.b_slot[t]])
    }

    /// Distances `(s_u, s_v)` along the directions of measurements `u` and
    /// `v`, with their Jacobian.
    pub fn scale(&self, u: usize, v: usize) -> Result<(Vector2<f64>, SMatrix<f64, 2, N>), MetricError> {
        let x_ij = self.rel_a(u, v);
        let x_lm = self.rel_b(u, v);
        let r_ij = rot_of(&x_ij);
        // R_il implied by the loop through measurement v
        let r_il = r_ij.mul(&self.rots[v]).mul(&rot_of(&x_lm).transpose());
        let a1 = self.dirs[u];
        let a2 = r_ij.apply(&self.dirs[v]);
        let t_ij = trans_of(&x_ij);
        let via = r_il.apply(&trans_of(&x_lm));
        let b = TVec {
            v: t_ij.v - via.v,
            j: t_ij.j - via.j,
        };
        let a = SMatrix::<f64, 3, 2>::from_columns(&[a1.v, -a2.v]);
        let nrm = a.transpose() * a;
        let eig = nrm.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if !(lo > 0.0) || (hi / lo).sqrt() > SCALE_CONDITION {
            return Err(MetricError::Degenerate("parallel directions"));
        }
        let inv = nrm.try_inverse().ok_or(MetricError::Degenerate("parallel directions"))?;
        let s = inv * a.transpose() * b.v;
        let r = b.v - a * s;
        let mut ds = SMatrix::<f64, 2, N>::zeros();
        for c in 0..N {
            let da = SMatrix::<f64, 3, 2>::from_columns(&[a1.j.column(c).into_owned(), -a2.j.column(c).into_owned()]);
            let db = b.j.column(c);
            let col = inv * (da.transpose() * r + a.transpose() * (db - da * s));
            ds.set_column(c, &col);
        }
        Ok((s, ds))
    }

    /// Angular residual of measurement `w` predicted from the pair `(u, v)`.
    pub fn direction(&self, u: usize, v: usize, w: usize) -> Result<(Vector2<f64>, SMatrix<f64, 2, N>), MetricError> {
        let (s, ds) = self.scale(u, v)?;
        if s[0] <= 0.0 || s[1] <= 0.0 {
            return Err(MetricError::Degenerate("negative scale"));
        }
        let d = &self.dirs[u];
        let mut jac = SMatrix::<f64, 6, N>::zeros();
        jac.fixed_rows_mut::<3>(0)
            .copy_from(&(d.v * ds.row(0) + s[0] * d.j));
        jac.fixed_rows_mut::<3>(3).copy_from(&self.rots[u].j);
        let t_il = TPose {
            pose: Se3::new(s[0] * d.v, self.rots[u].r),
            jac,
        };
        let t_n = t_il.compose(&self.rel_b(u, w));
        let dt = self.rel_a(u, w).inverse().compose(&t_n);
        let (pred, jp) = angles_jac(&dt.pose.t);
        let jy = dt.jac.fixed_rows::<3>(0).into_owned();
        let mut je = jp * jy;
        let col = MEAS_OFFSET + 5 * w;
        je[(0, col)] -= 1.0;
        je[(1, col + 1)] -= 1.0;
        let (az, el) = self.obs[w];
        let e = Vector2::new(wrap_angle(pred[0] - az), pred[1] - el);
        Ok((e, je))
    }
}

/// Azimuth and elevation of `y` with their Jacobian.
pub fn angles_jac(y: &Vector3<f64>) -> (Vector2<f64>, SMatrix<f64, 2, 3>) {
    let rho2 = y.x * y.x + y.y * y.y;
    let rho = rho2.sqrt();
    let az = y.y.atan2(y.x);
    let el = y.z.atan2(rho);
    let mut j = SMatrix::<f64, 2, 3>::zeros();
    if rho2 > 0.0 {
        j[(0, 0)] = -y.y / rho2;
        j[(0, 1)] = y.x / rho2;
        let n2 = rho2 + y.z * y.z;
        j[(1, 0)] = -y.z * y.x / (rho * n2);
        j[(1, 1)] = -y.z * y.y / (rho * n2);
        j[(1, 2)] = rho / n2;
    }
    (Vector2::new(az, el), j)
}

/// Covariance of the tracked inputs, block diagonal.
#[derive(Debug, Clone)]
struct InputCov {
    segs: [SMatrix<f64, 6, 6>; 4],
    meas: [SMatrix<f64, 5, 5>; 3],
}

impl InputCov {
    fn project<const R: usize>(&self, j: &SMatrix<f64, R, N>) -> SMatrix<f64, R, R> {
        let mut out = SMatrix::<f64, R, R>::zeros();
        for (s, c) in self.segs.iter().enumerate() {
            let b = j.fixed_columns::<6>(6 * s);
            out += b * c * b.transpose();
        }
        for (s, c) in self.meas.iter().enumerate() {
            let b = j.fixed_columns::<5>(MEAS_OFFSET + 5 * s);
            out += b * c * b.transpose();
        }
        out
    }
}

/// Chains the distinct pose indices of one robot; returns the two segments
/// and each measurement's slot.
fn chain_segments(odo: &Odometry3, idx: &[usize]) -> ([PoseWithCov<Se3, 6>; 2], [usize; 3]) {
    let mut sorted: Vec<usize> = idx.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let seg = |i: usize| match (sorted.get(i), sorted.get(i + 1)) {
        (Some(&a), Some(&b)) => odo.segment(a, b),
        _ => PoseWithCov::exact(Se3::identity()),
    };
    let segs = [seg(0), seg(1)];
    let mut slots = [0; 3];
    for (s, i) in idx.iter().enumerate() {
        slots[s] = sorted.iter().position(|x| x == i).unwrap();
    }
    (segs, slots)
}

struct Prepared {
    frame: TripleFrame,
    cov: InputCov,
}

fn prepare(ms: &[&ScalelessRelPoseMeasurement], odo_a: &Odometry3, odo_b: &Odometry3) -> Prepared {
    let ai: Vec<usize> = ms.iter().map(|m| m.from.index).collect();
    let bi: Vec<usize> = ms.iter().map(|m| m.to.index).collect();
    let (sa, a_slot) = chain_segments(odo_a, &ai);
    let (sb, b_slot) = chain_segments(odo_b, &bi);
    let pick = |s: usize| ms[s.min(ms.len() - 1)];
    let meas: [ScalelessValue; 3] = std::array::from_fn(|s| pick(s).into());
    let mut covs = [SMatrix::<f64, 5, 5>::zeros(); 3];
    for (s, m) in ms.iter().enumerate() {
        covs[s] = m.cov;
    }
    Prepared {
        frame: TripleFrame::from_raw(&sa.map(|p| p.pose), &sb.map(|p| p.pose), a_slot, b_slot, &meas),
        cov: InputCov {
            segs: [sa[0].cov, sa[1].cov, sb[0].cov, sb[1].cov],
            meas: covs,
        },
    }
}

/// Squared Mahalanobis norm of the rotation loop
/// `R_ij · R_jm · R_lmᵀ · R_ilᵀ` (3 dof).
pub fn visual_rotation_metric(
    z_il: &ScalelessRelPoseMeasurement,
    z_jm: &ScalelessRelPoseMeasurement,
    odo_a: &Odometry3,
    odo_b: &Odometry3,
) -> Result<f64, MetricError> {
    let x_ij = odo_a.segment(z_il.from.index, z_jm.from.index);
    let x_lm = odo_b.segment(z_il.to.index, z_jm.to.index);
    let a = x_ij.pose.r;
    let b = z_jm.rotation;
    let c = x_lm.pose.r;
    let d = z_il.rotation;
    let lp = a * b * c.inverse() * d.inverse();
    let dm = *d.matrix();
    let dc = dm * c.matrix();
    let ja = dc * b.matrix().transpose();
    let rot_block = |m: &SMatrix<f64, 6, 6>| m.fixed_view::<3, 3>(3, 3).into_owned();
    let meas_block = |m: &SMatrix<f64, 5, 5>| m.fixed_view::<3, 3>(2, 2).into_owned();
    let sigma: Matrix3<f64> = ja * rot_block(&x_ij.cov) * ja.transpose()
        + dc * meas_block(&z_jm.cov) * dc.transpose()
        + dc * rot_block(&x_lm.cov) * dc.transpose()
        + dm * meas_block(&z_il.cov) * dm.transpose();
    let r = so3::log(&lp);
    let jr = so3::right_jacobian_inv(&r);
    mahalanobis(&r, &(jr * sigma * jr.transpose()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    pub scales: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

/// Least-squares distances along the directions of `z_il` and `z_jm`.
/// Negative components mean the pair cannot be consistent.
pub fn recover_scale(
    z_il: &ScalelessRelPoseMeasurement,
    z_jm: &ScalelessRelPoseMeasurement,
    odo_a: &Odometry3,
    odo_b: &Odometry3,
) -> Result<ScaleEstimate, MetricError> {
    let p = prepare(&[z_il, z_jm], odo_a, odo_b);
    let (scales, j) = p.frame.scale(0, 1)?;
    Ok(ScaleEstimate {
        scales,
        cov: p.cov.project(&j),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisualSettings {
    /// Gate on the 3-dof rotation-loop score.
    pub gamma_rotation: f64,
    /// Gate on the 2-dof direction score.
    pub gamma_direction: f64,
}

impl Default for VisualSettings {
    fn default() -> Self {
        Self {
            gamma_rotation: 7.814_727_903_251_178,
            gamma_direction: 5.991_464_547_107_979,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionOutcome {
    pub pass: bool,
    /// Largest role score.
    pub score: f64,
    /// Score with measurement `r` predicted from the other two.
    pub role_scores: [f64; 3],
}

/// Direction check of a triple: each measurement in turn is predicted from
/// the other two; all three must pass.
pub fn visual_direction_metric(
    ms: [&ScalelessRelPoseMeasurement; 3],
    odo_a: &Odometry3,
    odo_b: &Odometry3,
    s: &VisualSettings,
) -> DirectionOutcome {
    let p = prepare(&ms, odo_a, odo_b);
    let role_scores = [0, 1, 2].map(|w| role_score(&p, w));
    let score = role_scores.iter().copied().fold(0.0, f64::max);
    DirectionOutcome {
        pass: score <= s.gamma_direction,
        score,
        role_scores,
    }
}

fn role_score(p: &Prepared, w: usize) -> f64 {
    let (u, v) = match w {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    match p.frame.direction(u, v, w) {
        Ok((e, j)) => mahalanobis(&e, &p.cov.project(&j)).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    }
}

/// Checks over measurements from robot a (`from`) to robot b (`to`). The
/// order-3 check includes the three pairwise rotation checks, so lower-order
/// pruning never removes a passing triple.
pub struct VisualChecks<'a> {
    pub measurements: Vec<ScalelessRelPoseMeasurement>,
    pub odometry_a: &'a Odometry3,
    pub odometry_b: &'a Odometry3,
    pub settings: VisualSettings,
    pub order: usize,
}

impl VisualChecks<'_> {
    fn rotation(&self, u: usize, v: usize) -> Verdict {
        let m = &self.measurements;
        let s = visual_rotation_metric(&m[u], &m[v], self.odometry_a, self.odometry_b)
            .unwrap_or(f64::INFINITY);
        Verdict::gate(s, self.settings.gamma_rotation)
    }
}

impl GroupCheck for VisualChecks<'_> {
    fn order(&self) -> usize {
        self.order
    }

    fn check(&self, t: &[usize]) -> Verdict {
        if self.order == 2 {
            return self.rotation(t[0], t[1]);
        }
        for (u, v) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
            let r = self.rotation(u, v);
            if !r.pass {
                return Verdict::fail();
            }
        }
        let m = &self.measurements;
        let p = prepare(&[&m[t[0]], &m[t[1]], &m[t[2]]], self.odometry_a, self.odometry_b);
        let mut worst: f64 = 0.0;
        for w in 0..3 {
            worst = worst.max(role_score(&p, w));
            if worst > self.settings.gamma_direction {
                break;
            }
        }
        Verdict::gate(worst, self.settings.gamma_direction)
    }
}
