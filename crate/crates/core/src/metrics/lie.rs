//! SE(2)/SE(3) poses and first-order covariance propagation.
//!
//! Perturbations are decoupled: a pose `(R, t)` is perturbed as
//! `(R·Exp(φ), t + δt)`, with the tangent ordered `(δt, φ)`. Covariances of
//! [`PoseWithCov`] live in that tangent space.

use nalgebra::{Matrix2, Matrix3, Rotation3, SMatrix, SVector, Vector2, Vector3};
use std::f64::consts::PI;

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

pub fn rot2(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// The 2D "cross" generator `[[0, -1], [1, 0]]`.
pub fn perp2() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

pub mod so3 {
    use super::*;

    pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
        Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
    }

    pub fn exp(v: &Vector3<f64>) -> Rotation3<f64> {
        Rotation3::new(*v)
    }

    /// Rotation vector of `r`, accurate near the identity (where the
    /// acos-based formula loses half the digits).
    pub fn log(r: &Rotation3<f64>) -> Vector3<f64> {
        let m = r.matrix();
        let w = 0.5 * Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
        let s = w.norm();
        let c = 0.5 * (m.trace() - 1.0);
        let th = s.atan2(c);
        if c > -0.5 {
            let f = if s < 1e-8 { 1.0 + th * th / 6.0 } else { th / s };
            return w * f;
        }
        let sym = 0.5 * (m + m.transpose()) - Matrix3::identity() * c;
        let i = (0..3).max_by(|&a, &b| sym[(a, a)].total_cmp(&sym[(b, b)])).unwrap();
        let mut axis = sym.column(i) / (sym[(i, i)] * (1.0 - c)).sqrt();
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
        axis.normalize() * th
    }

    /// Right Jacobian: `Exp(φ + δ) ≈ Exp(φ)·Exp(Jr(φ)·δ)`.
    pub fn right_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
        let th = phi.norm();
        let w = hat(phi);
        if th < 1e-6 {
            return Matrix3::identity() - 0.5 * w + w * w / 6.0;
        }
        let th2 = th * th;
        Matrix3::identity() - (1.0 - th.cos()) / th2 * w + (th - th.sin()) / (th2 * th) * w * w
    }

    pub fn right_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
        let th = phi.norm();
        let w = hat(phi);
        if th < 1e-6 {
            return Matrix3::identity() + 0.5 * w + w * w / 12.0;
        }
        let c = 1.0 / (th * th) - (1.0 + th.cos()) / (2.0 * th * th.sin());
        Matrix3::identity() + 0.5 * w + c * w * w
    }
}

/// A rigid-body pose group with tangent dimension `D`.
pub trait PoseGroup<const D: usize>: Copy + std::fmt::Debug + Send + Sync + 'static {
    /// Translation dimension.
    const T: usize;

    fn identity() -> Self;
    fn compose(&self, other: &Self) -> Self;
    fn inverse(&self) -> Self;
    /// Jacobians of `a ⊕ b` with respect to `a` and `b`.
    fn compose_jacobians(a: &Self, b: &Self) -> (SMatrix<f64, D, D>, SMatrix<f64, D, D>);
    fn inverse_jacobian(a: &Self) -> SMatrix<f64, D, D>;
    fn perturb(&self, delta: &SVector<f64, D>) -> Self;
    /// Residual coordinates `(t, log R)`; zero at the identity.
    fn residual(&self) -> SVector<f64, D>;
    /// Jacobian of [`PoseGroup::residual`] with respect to a perturbation.
    fn residual_jacobian(&self) -> SMatrix<f64, D, D>;
    /// Tangent difference `self ⊖ reference` consistent with [`PoseGroup::perturb`].
    fn difference(&self, reference: &Self) -> SVector<f64, D>;

    /// For a trajectory step `prev → next`, maps the step's perturbation to
    /// world-frame coordinates `(δp, ω)` with the lever arm factored out
    /// (see [`PoseGroup::world_point_map`]).
    fn world_step_map(prev: &Self, next: &Self) -> SMatrix<f64, D, D>;
    /// Lever-arm factor: world perturbation of pose `x` is
    /// `world_point_map(x) · world_step_map(..) · δ`.
    fn world_point_map(x: &Self) -> SMatrix<f64, D, D>;
    /// Converts a world-frame perturbation of `b` (with `a` held fixed) into
    /// the tangent of the relative pose `a⁻¹ ⊕ b`.
    fn world_to_relative(a: &Self, b: &Self) -> SMatrix<f64, D, D>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se2 {
    pub t: Vector2<f64>,
    pub theta: f64,
}

impl Se2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            t: Vector2::new(x, y),
            theta: wrap_angle(theta),
        }
    }

    pub fn rotation(&self) -> Matrix2<f64> {
        rot2(self.theta)
    }
}

impl PoseGroup<3> for Se2 {
    const T: usize = 2;

    fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    fn compose(&self, o: &Self) -> Self {
        Self {
            t: self.t + self.rotation() * o.t,
            theta: wrap_angle(self.theta + o.theta),
        }
    }

    fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        Self {
            t: -(rt * self.t),
            theta: wrap_angle(-self.theta),
        }
    }

    fn compose_jacobians(a: &Self, b: &Self) -> (SMatrix<f64, 3, 3>, SMatrix<f64, 3, 3>) {
        let ra = a.rotation();
        let mut ja = SMatrix::<f64, 3, 3>::identity();
        ja.fixed_view_mut::<2, 1>(0, 2)
            .copy_from(&(ra * perp2() * b.t));
        let mut jb = SMatrix::<f64, 3, 3>::identity();
        jb.fixed_view_mut::<2, 2>(0, 0).copy_from(&ra);
        (ja, jb)
    }

    fn inverse_jacobian(a: &Self) -> SMatrix<f64, 3, 3> {
        let rt = a.rotation().transpose();
        let mut j = SMatrix::<f64, 3, 3>::zeros();
        j.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-rt));
        j.fixed_view_mut::<2, 1>(0, 2)
            .copy_from(&(perp2() * rt * a.t));
        j[(2, 2)] = -1.0;
        j
    }

    fn perturb(&self, d: &SVector<f64, 3>) -> Self {
        Self {
            t: self.t + Vector2::new(d[0], d[1]),
            theta: wrap_angle(self.theta + d[2]),
        }
    }

    fn residual(&self) -> SVector<f64, 3> {
        SVector::<f64, 3>::new(self.t.x, self.t.y, wrap_angle(self.theta))
    }

    fn residual_jacobian(&self) -> SMatrix<f64, 3, 3> {
        SMatrix::<f64, 3, 3>::identity()
    }

    fn difference(&self, r: &Self) -> SVector<f64, 3> {
        let dt = self.t - r.t;
        SVector::<f64, 3>::new(dt.x, dt.y, wrap_angle(self.theta - r.theta))
    }

    fn world_step_map(prev: &Self, next: &Self) -> SMatrix<f64, 3, 3> {
        let mut h = SMatrix::<f64, 3, 3>::identity();
        h.fixed_view_mut::<2, 2>(0, 0).copy_from(&prev.rotation());
        h.fixed_view_mut::<2, 1>(0, 2)
            .copy_from(&(-perp2() * next.t));
        h
    }

    fn world_point_map(x: &Self) -> SMatrix<f64, 3, 3> {
        let mut b = SMatrix::<f64, 3, 3>::identity();
        b.fixed_view_mut::<2, 1>(0, 2).copy_from(&(perp2() * x.t));
        b
    }

    fn world_to_relative(a: &Self, _b: &Self) -> SMatrix<f64, 3, 3> {
        let mut d = SMatrix::<f64, 3, 3>::identity();
        d.fixed_view_mut::<2, 2>(0, 0)
            .copy_from(&a.rotation().transpose());
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se3 {
    pub t: Vector3<f64>,
    pub r: Rotation3<f64>,
}

impl Se3 {
    pub fn new(t: Vector3<f64>, r: Rotation3<f64>) -> Self {
        Self { t, r }
    }
}

impl PoseGroup<6> for Se3 {
    const T: usize = 3;

    fn identity() -> Self {
        Self::new(Vector3::zeros(), Rotation3::identity())
    }

    fn compose(&self, o: &Self) -> Self {
        Self {
            t: self.t + self.r * o.t,
            r: self.r * o.r,
        }
    }

    fn inverse(&self) -> Self {
        let ri = self.r.inverse();
        Self {
            t: -(ri * self.t),
            r: ri,
        }
    }

    fn compose_jacobians(a: &Self, b: &Self) -> (SMatrix<f64, 6, 6>, SMatrix<f64, 6, 6>) {
        let ra = *a.r.matrix();
        let mut ja = SMatrix::<f64, 6, 6>::identity();
        ja.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(-ra * so3::hat(&b.t)));
        ja.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&b.r.matrix().transpose());
        let mut jb = SMatrix::<f64, 6, 6>::identity();
        jb.fixed_view_mut::<3, 3>(0, 0).copy_from(&ra);
        (ja, jb)
    }

    fn inverse_jacobian(a: &Self) -> SMatrix<f64, 6, 6> {
        let r = *a.r.matrix();
        let rt = r.transpose();
        let mut j = SMatrix::<f64, 6, 6>::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-rt));
        j.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(-so3::hat(&(rt * a.t))));
        j.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-r));
        j
    }

    fn perturb(&self, d: &SVector<f64, 6>) -> Self {
        let phi = Vector3::new(d[3], d[4], d[5]);
        Self {
            t: self.t + Vector3::new(d[0], d[1], d[2]),
            r: self.r * so3::exp(&phi),
        }
    }

    fn residual(&self) -> SVector<f64, 6> {
        let l = so3::log(&self.r);
        SVector::<f64, 6>::from_column_slice(&[self.t.x, self.t.y, self.t.z, l.x, l.y, l.z])
    }

    fn residual_jacobian(&self) -> SMatrix<f64, 6, 6> {
        let mut j = SMatrix::<f64, 6, 6>::identity();
        j.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&so3::right_jacobian_inv(&so3::log(&self.r)));
        j
    }

    fn difference(&self, r: &Self) -> SVector<f64, 6> {
        let dt = self.t - r.t;
        let phi = so3::log(&(r.r.inverse() * self.r));
        SVector::<f64, 6>::from_column_slice(&[dt.x, dt.y, dt.z, phi.x, phi.y, phi.z])
    }

    fn world_step_map(prev: &Self, next: &Self) -> SMatrix<f64, 6, 6> {
        let rn = *next.r.matrix();
        let mut h = SMatrix::<f64, 6, 6>::zeros();
        h.fixed_view_mut::<3, 3>(0, 0).copy_from(prev.r.matrix());
        h.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(so3::hat(&next.t) * rn));
        h.fixed_view_mut::<3, 3>(3, 3).copy_from(&rn);
        h
    }

    fn world_point_map(x: &Self) -> SMatrix<f64, 6, 6> {
        let mut b = SMatrix::<f64, 6, 6>::identity();
        b.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-so3::hat(&x.t)));
        b
    }

    fn world_to_relative(a: &Self, b: &Self) -> SMatrix<f64, 6, 6> {
        let mut d = SMatrix::<f64, 6, 6>::zeros();
        d.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&a.r.matrix().transpose());
        d.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&b.r.matrix().transpose());
        d
    }
}

/// A pose with a covariance over its tangent space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseWithCov<G: PoseGroup<D>, const D: usize> {
    pub pose: G,
    pub cov: SMatrix<f64, D, D>,
}

pub type Pose2 = PoseWithCov<Se2, 3>;
pub type Pose3 = PoseWithCov<Se3, 6>;

impl<G: PoseGroup<D>, const D: usize> PoseWithCov<G, D> {
    pub fn new(pose: G, cov: SMatrix<f64, D, D>) -> Self {
        Self { pose, cov }
    }

    pub fn exact(pose: G) -> Self {
        Self {
            pose,
            cov: SMatrix::zeros(),
        }
    }

    /// `self ⊕ other`, treating the two inputs as independent.
    pub fn compose(&self, other: &Self) -> Self {
        let (ja, jb) = G::compose_jacobians(&self.pose, &other.pose);
        Self {
            pose: self.pose.compose(&other.pose),
            cov: ja * self.cov * ja.transpose() + jb * other.cov * jb.transpose(),
        }
    }

    /// `⊖self`.
    pub fn invert(&self) -> Self {
        let j = G::inverse_jacobian(&self.pose);
        Self {
            pose: self.pose.inverse(),
            cov: j * self.cov * j.transpose(),
        }
    }
}

/// A pose carrying its Jacobian with respect to `N` upstream inputs.
#[derive(Debug, Clone, Copy)]
pub struct Tracked<G: PoseGroup<D>, const D: usize, const N: usize> {
    pub pose: G,
    pub jac: SMatrix<f64, D, N>,
}

impl<G: PoseGroup<D>, const D: usize, const N: usize> Tracked<G, D, N> {
    pub fn constant(pose: G) -> Self {
        Self {
            pose,
            jac: SMatrix::zeros(),
        }
    }

    /// A pose that is itself inputs `offset..offset+D`.
    pub fn input(pose: G, offset: usize) -> Self {
        let mut jac = SMatrix::zeros();
        for i in 0..D {
            jac[(i, offset + i)] = 1.0;
        }
        Self { pose, jac }
    }

    pub fn compose(&self, other: &Self) -> Self {
        let (ja, jb) = G::compose_jacobians(&self.pose, &other.pose);
        Self {
            pose: self.pose.compose(&other.pose),
            jac: ja * self.jac + jb * other.jac,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            pose: self.pose.inverse(),
            jac: G::inverse_jacobian(&self.pose) * self.jac,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Unit;

    pub(crate) fn fd_jacobian<const D: usize, F>(f: F, h: f64) -> SMatrix<f64, D, D>
    where
        F: Fn(&SVector<f64, D>) -> SVector<f64, D>,
    {
        let mut j = SMatrix::<f64, D, D>::zeros();
        for c in 0..D {
            let mut e = SVector::<f64, D>::zeros();
            e[c] = h;
            let col = (f(&e) - f(&-e)) / (2.0 * h);
            j.set_column(c, &col);
        }
        j
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_and_inverse() {
        let p = Se2::new(1.0, -2.0, 0.7);
        let id = Se2::identity();
        assert_eq!(id.compose(&p).t, p.t);
        let back = p.compose(&p.inverse());
        assert!(back.t.norm() < 1e-12 && back.theta.abs() < 1e-12);

        let cov = SMatrix::<f64, 3, 3>::from_diagonal(&Vector3::new(0.1, 0.2, 0.05));
        let pc = Pose2::new(p, cov);
        let c = Pose2::exact(id).compose(&pc);
        assert!((c.cov - cov).norm() < 1e-12);
        let loop_ = pc.compose(&pc.invert());
        assert!(loop_.pose.t.norm() < 1e-12);
        assert!(loop_.cov.norm() > 0.1);
    }

    #[test]
    fn se3_inverse_round_trip() {
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(1.0, 2.0, 3.0)), 0.8);
        let p = Se3::new(Vector3::new(1.0, 2.0, 3.0), r);
        let q = p.compose(&p.inverse());
        assert!(q.t.norm() < 1e-12);
        assert!(so3::log(&q.r).norm() < 1e-12);
    }

    #[test]
    fn log_inverts_exp() {
        for v in [
            Vector3::new(1e-9, -2e-9, 3e-10),
            Vector3::new(1e-5, 2e-6, -3e-6),
            Vector3::new(0.4, -1.1, 0.3),
            Vector3::new(0.0, 3.1, 0.0),
            Vector3::new(-1.8, 1.8, 1.0),
        ] {
            let back = so3::log(&so3::exp(&v));
            assert!((back - v).norm() <= 1e-12 * v.norm().max(1.0), "{v} {back}");
        }
    }

    #[test]
    fn right_jacobian_inverse_pair() {
        for phi in [
            Vector3::new(0.1, -0.2, 0.3),
            Vector3::new(1e-8, 0.0, 0.0),
            Vector3::new(1.0, 1.0, -0.5),
        ] {
            let p = so3::right_jacobian(&phi) * so3::right_jacobian_inv(&phi);
            assert!((p - Matrix3::identity()).norm() < 1e-9);
        }
    }

    #[test]
    fn tracked_matches_with_cov() {
        let a = Se2::new(1.0, 0.5, 0.3);
        let b = Se2::new(-0.2, 2.0, -1.1);
        let ta: Tracked<Se2, 3, 6> = Tracked::input(a, 0);
        let tb: Tracked<Se2, 3, 6> = Tracked::input(b, 3);
        let c = ta.compose(&tb.inverse());
        let ca = SMatrix::<f64, 3, 3>::from_diagonal(&Vector3::new(0.1, 0.2, 0.03));
        let cb = SMatrix::<f64, 3, 3>::from_diagonal(&Vector3::new(0.05, 0.02, 0.01));
        let mut full = SMatrix::<f64, 6, 6>::zeros();
        full.fixed_view_mut::<3, 3>(0, 0).copy_from(&ca);
        full.fixed_view_mut::<3, 3>(3, 3).copy_from(&cb);
        let via_tracked = c.jac * full * c.jac.transpose();
        let via_cov = Pose2::new(a, ca).compose(&Pose2::new(b, cb).invert());
        assert!((via_tracked - via_cov.cov).norm() < 1e-12);
    }

    #[test]
    fn se2_compose_jacobians_fd() {
        let a = Se2::new(0.3, -1.0, 2.5);
        let b = Se2::new(2.0, 1.0, -0.4);
        let (ja, jb) = Se2::compose_jacobians(&a, &b);
        let c = a.compose(&b);
        let fa = fd_jacobian(|d| a.perturb(d).compose(&b).difference(&c), 1e-6);
        let fb = fd_jacobian(|d| a.compose(&b.perturb(d)).difference(&c), 1e-6);
        assert!((ja - fa).norm() < 1e-8);
        assert!((jb - fb).norm() < 1e-8);
        let ji = Se2::inverse_jacobian(&a);
        let ai = a.inverse();
        let fi = fd_jacobian(|d| a.perturb(d).inverse().difference(&ai), 1e-6);
        assert!((ji - fi).norm() < 1e-8);
    }

    #[test]
    fn se3_jacobians_fd() {
        let a = Se3::new(
            Vector3::new(0.3, -1.0, 2.0),
            so3::exp(&Vector3::new(0.4, -0.3, 1.2)),
        );
        let b = Se3::new(
            Vector3::new(-1.0, 0.5, 0.7),
            so3::exp(&Vector3::new(-0.9, 0.2, 0.1)),
        );
        let (ja, jb) = Se3::compose_jacobians(&a, &b);
        let c = a.compose(&b);
        let fa = fd_jacobian(|d| a.perturb(d).compose(&b).difference(&c), 1e-6);
        let fb = fd_jacobian(|d| a.compose(&b.perturb(d)).difference(&c), 1e-6);
        assert!((ja - fa).norm() < 1e-7, "{ja} {fa}");
        assert!((jb - fb).norm() < 1e-7);
        let ai = a.inverse();
        let fi = fd_jacobian(|d| a.perturb(d).inverse().difference(&ai), 1e-6);
        assert!((Se3::inverse_jacobian(&a) - fi).norm() < 1e-7);
        let fr = fd_jacobian(|d| a.perturb(d).residual() - a.residual(), 1e-6);
        assert!((a.residual_jacobian() - fr).norm() < 1e-6);
    }
}
