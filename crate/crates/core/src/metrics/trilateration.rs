//! Closed-form 2D trilateration with first-order covariance.
//!
//! Subtracting the first circle equation from the other two gives a 2×2
//! linear system in the beacon position. Near-collinear centers make that
//! system ill-conditioned; then, or when its solution misses the circles,
//! the two most separated circles are intersected directly, which yields up
//! to two mirror-image candidates.

use nalgebra::{Matrix2, SMatrix, Vector2};

use super::lie::perp2;
use super::MetricError;

/// Condition number of the linear system above which the two-circle
/// fallback is used.
pub const COLLINEAR_CONDITION: f64 = 1e6;

/// Jacobian of a candidate with respect to `(c1, c2, c3, r1, r2, r3)`,
/// centers first, each center as `(x, y)`.
pub type TriJacobian = SMatrix<f64, 2, 9>;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub position: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrilaterationResult {
    pub candidates: Vec<Candidate>,
    pub degenerate: bool,
}

/// Trilaterates from exactly known centers and noisy ranges.
pub fn trilaterate(
    centers: &[Vector2<f64>; 3],
    ranges: &[f64; 3],
    variances: &[f64; 3],
) -> Result<TrilaterationResult, MetricError> {
    let (cands, degenerate) = trilaterate_jac(centers, ranges, variances)?;
    let candidates = cands
        .into_iter()
        .map(|(position, j)| {
            let jr = j.fixed_columns::<3>(6);
            let mut cov = Matrix2::zeros();
            for i in 0..3 {
                cov += jr.column(i) * jr.column(i).transpose() * variances[i];
            }
            Candidate { position, cov }
        })
        .collect();
    Ok(TrilaterationResult {
        candidates,
        degenerate,
    })
}

/// Candidates and their Jacobians. `variances` set the tolerances: the
/// linear solution is kept only within 3σ of all three circles, otherwise
/// the two most separated circles are intersected (near-tangent pairs
/// clamped within 3σ) and each intersection must lie within 3σ of the third
/// circle, counting the pair's range noise. They do not enter the Jacobian.
/// Infinite variances disable the tolerances.
pub fn trilaterate_jac(
    c: &[Vector2<f64>; 3],
    r: &[f64; 3],
    variances: &[f64; 3],
) -> Result<(Vec<(Vector2<f64>, TriJacobian)>, bool), MetricError> {
    let on_circles = |l: &Vector2<f64>| {
        (0..3).all(|i| {
            let e = (l - c[i]).norm() - r[i];
            e * e <= 9.0 * variances[i]
        })
    };
    // a well-conditioned but noisy linear solve can still land far from
    // the circles when the centers are close to a line
    if let Some(lin) = linear_candidate(c, r) {
        if on_circles(&lin.0) {
            return Ok((vec![lin], false));
        }
    }
    let (k, cands) = pair_candidates(c, r, variances)?;
    // the third residual also carries the pair's range noise through the
    // intersection
    let kept: Vec<_> = cands
        .into_iter()
        .filter(|(l, jac)| {
            let d = l - c[k];
            let h = d.norm();
            let u = if h > 1e-12 { d / h } else { Vector2::zeros() };
            let var: f64 = (0..3)
                .filter(|&i| i != k)
                .map(|i| (u.dot(&jac.column(6 + i))).powi(2) * variances[i])
                .sum::<f64>()
                + variances[k];
            let e = h - r[k];
            e * e <= 9.0 * var || var.is_nan()
        })
        .collect();
    if kept.is_empty() {
        return Err(MetricError::NoSolution);
    }
    Ok((kept, true))
}

/// Radical center of the three circles, `None` when the linear system is
/// too ill-conditioned.
fn linear_candidate(c: &[Vector2<f64>; 3], r: &[f64; 3]) -> Option<(Vector2<f64>, TriJacobian)> {
    let d1 = c[1] - c[0];
    let d2 = c[2] - c[0];
    let a = 2.0 * Matrix2::new(d1.x, d1.y, d2.x, d2.y);
    if condition(&a) <= COLLINEAR_CONDITION {
        let inv = a.try_inverse()?;
        let b = Vector2::new(
            r[0] * r[0] - r[1] * r[1] + c[1].norm_squared() - c[0].norm_squared(),
            r[0] * r[0] - r[2] * r[2] + c[2].norm_squared() - c[0].norm_squared(),
        );
        let l = inv * b;
        // row i of (db - dA l), differentiated per input
        let mut rhs = SMatrix::<f64, 2, 9>::zeros();
        for (row, i) in [(0usize, 1usize), (1, 2)] {
            let gi = 2.0 * (c[i] - l);
            let g0 = -2.0 * (c[0] - l);
            rhs[(row, 2 * i)] = gi.x;
            rhs[(row, 2 * i + 1)] = gi.y;
            rhs[(row, 0)] = g0.x;
            rhs[(row, 1)] = g0.y;
            rhs[(row, 6)] = 2.0 * r[0];
            rhs[(row, 6 + i)] = -2.0 * r[i];
        }
        return Some((l, inv * rhs));
    }
    None
}

/// Intersections of the two most separated circles, with the index of the
/// remaining one.
fn pair_candidates(
    c: &[Vector2<f64>; 3],
    r: &[f64; 3],
    variances: &[f64; 3],
) -> Result<(usize, Vec<(Vector2<f64>, TriJacobian)>), MetricError> {
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    let &(i, j) = pairs
        .iter()
        .max_by(|p, q| {
            let dp = (c[p.0] - c[p.1]).norm();
            let dq = (c[q.0] - c[q.1]).norm();
            dp.partial_cmp(&dq).unwrap()
        })
        .unwrap();
    let tol = 3.0 * (variances[i] + variances[j]).sqrt();
    let cands = circle_pair(c[i], c[j], r[i], r[j], tol)?;
    let out = cands
        .into_iter()
        .map(|l| {
            let jac = match pair_jacobian(&l, c[i], c[j], r[i], r[j]) {
                Some(jp) => jp,
                None => numeric_pair_jacobian(c[i], c[j], r[i], r[j]),
            };
            (l, embed_pair(&jac, i, j))
        })
        .collect();
    Ok((3 - i - j, out))
}

fn condition(a: &Matrix2<f64>) -> f64 {
    let ata = a.transpose() * a;
    let tr = ata.trace();
    let det = ata.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let hi = 0.5 * tr + disc;
    let lo = 0.5 * tr - disc;
    if lo <= hi * 1e-300 || lo <= 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    }
}

/// Intersections of two circles, `+` side (left of `c1 → c2`) first. A gap
/// no larger than `tol` between non-intersecting circles collapses to the
/// single closest point.
fn circle_pair(
    c1: Vector2<f64>,
    c2: Vector2<f64>,
    r1: f64,
    r2: f64,
    tol: f64,
) -> Result<Vec<Vector2<f64>>, MetricError> {
    let dv = c2 - c1;
    let d = dv.norm();
    if d < 1e-12 {
        return Err(MetricError::Degenerate("coincident centers"));
    }
    let e = dv / d;
    let gap = (d - r1 - r2).max((r1 - r2).abs() - d);
    if gap > tol {
        return Err(MetricError::NoSolution);
    }
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    if gap >= 0.0 || h2 <= 0.0 {
        return Ok(vec![c1 + a * e]);
    }
    let h = h2.sqrt();
    let n = perp2() * e;
    Ok(vec![c1 + a * e + h * n, c1 + a * e - h * n])
}

/// Implicit-function Jacobian with respect to `(c1, c2, r1, r2)`; `None`
/// when the circles are (nearly) tangent at `l`.
fn pair_jacobian(
    l: &Vector2<f64>,
    c1: Vector2<f64>,
    c2: Vector2<f64>,
    r1: f64,
    r2: f64,
) -> Option<SMatrix<f64, 2, 6>> {
    let u1 = l - c1;
    let u2 = l - c2;
    let m = 2.0 * Matrix2::new(u1.x, u1.y, u2.x, u2.y);
    if condition(&m) > COLLINEAR_CONDITION {
        return None;
    }
    let inv = m.try_inverse()?;
    let mut rhs = SMatrix::<f64, 2, 6>::zeros();
    rhs[(0, 0)] = 2.0 * u1.x;
    rhs[(0, 1)] = 2.0 * u1.y;
    rhs[(0, 4)] = 2.0 * r1;
    rhs[(1, 2)] = 2.0 * u2.x;
    rhs[(1, 3)] = 2.0 * u2.y;
    rhs[(1, 5)] = 2.0 * r2;
    Some(inv * rhs)
}

/// Central differences of the tangent point `c1 + a·e` that a clamped
/// intersection returns.
fn numeric_pair_jacobian(
    c1: Vector2<f64>,
    c2: Vector2<f64>,
    r1: f64,
    r2: f64,
) -> SMatrix<f64, 2, 6> {
    let foot = |x: &[f64; 6]| -> Vector2<f64> {
        let (p1, p2) = (Vector2::new(x[0], x[1]), Vector2::new(x[2], x[3]));
        let d = (p2 - p1).norm();
        let a = (x[4] * x[4] - x[5] * x[5] + d * d) / (2.0 * d);
        p1 + a * (p2 - p1) / d
    };
    let x0 = [c1.x, c1.y, c2.x, c2.y, r1, r2];
    let mut j = SMatrix::<f64, 2, 6>::zeros();
    for col in 0..6 {
        let h = 1e-6 * x0[col].abs().max(1.0);
        let mut p = x0;
        let mut q = x0;
        p[col] += h;
        q[col] -= h;
        j.set_column(col, &((foot(&p) - foot(&q)) / (2.0 * h)));
    }
    j
}

fn embed_pair(jp: &SMatrix<f64, 2, 6>, i: usize, j: usize) -> TriJacobian {
    let mut out = TriJacobian::zeros();
    out.fixed_view_mut::<2, 2>(0, 2 * i)
        .copy_from(&jp.fixed_view::<2, 2>(0, 0));
    out.fixed_view_mut::<2, 2>(0, 2 * j)
        .copy_from(&jp.fixed_view::<2, 2>(0, 2));
    out.set_column(6 + i, &jp.column(4));
    out.set_column(6 + j, &jp.column(5));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn v(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    fn fd_tri(c: &[Vector2<f64>; 3], r: &[f64; 3], which: usize) -> TriJacobian {
        let mut j = TriJacobian::zeros();
        let h = 1e-6;
        for col in 0..9 {
            let eval = |s: f64| {
                let mut c2 = *c;
                let mut r2 = *r;
                if col < 6 {
                    c2[col / 2][col % 2] += s;
                } else {
                    r2[col - 6] += s;
                }
                trilaterate_jac(&c2, &r2, &[f64::INFINITY; 3]).unwrap().0[which].0
            };
            j.set_column(col, &((eval(h) - eval(-h)) / (2.0 * h)));
        }
        j
    }

    #[test]
    fn exact_construction() {
        let c = [v(0.0, 0.0), v(4.0, 0.0), v(0.0, 4.0)];
        let r = [2f64.sqrt(), 10f64.sqrt(), 10f64.sqrt()];
        let t = trilaterate(&c, &r, &[0.01; 3]).unwrap();
        assert!(!t.degenerate);
        assert_eq!(t.candidates.len(), 1);
        assert!((t.candidates[0].position - v(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn collinear_centers_give_mirror_pair() {
        let c = [v(0.0, 0.0), v(2.0, 0.0), v(4.0, 0.0)];
        let b = v(1.0, 2.0);
        let r = [(b - c[0]).norm(), (b - c[1]).norm(), (b - c[2]).norm()];
        let t = trilaterate(&c, &r, &[0.01; 3]).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.candidates.len(), 2);
        let mut ys: Vec<f64> = t.candidates.iter().map(|k| k.position.y).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ys[0] + 2.0).abs() < 1e-9 && (ys[1] - 2.0).abs() < 1e-9);
        assert!(t.candidates.iter().all(|k| (k.position.x - 1.0).abs() < 1e-9));
    }

    #[test]
    fn separated_circles_have_no_solution() {
        let c = [v(0.0, 0.0), v(10.0, 0.0), v(20.0, 0.0)];
        assert_eq!(
            trilaterate(&c, &[1.0, 1.0, 1.0], &[0.01; 3]),
            Err(MetricError::NoSolution)
        );
        // a gap inside the tolerance collapses to one candidate
        let t = trilaterate(&c, &[9.95, 0.05, 9.95], &[0.01; 3]).unwrap();
        assert_eq!(t.candidates.len(), 1);
        assert!((t.candidates[0].position - v(10.0, 0.0)).norm() < 0.1);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let b = v(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let c = [0, 1, 2].map(|_| v(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)));
            let r = [0, 1, 2].map(|i| (b - c[i]).norm() + rng.random_range(-0.05..0.05));
            let Ok((cands, false)) = trilaterate_jac(&c, &r, &[f64::INFINITY; 3]) else {
                continue;
            };
            let fd = fd_tri(&c, &r, 0);
            assert!((cands[0].1 - fd).norm() / fd.norm().max(1.0) < 1e-5);
        }
        // fallback branch
        for _ in 0..100 {
            let b = v(rng.random_range(-5.0..5.0), rng.random_range(1.0..5.0));
            let x = [rng.random_range(-8.0..-4.0), rng.random_range(-1.0..1.0), rng.random_range(4.0..8.0)];
            let c = x.map(|x| v(x, 0.0));
            let r = [0, 1, 2].map(|i| (b - c[i]).norm());
            let (cands, deg) = trilaterate_jac(&c, &r, &[f64::INFINITY; 3]).unwrap();
            assert!(deg);
            for (w, (p, j)) in cands.iter().enumerate() {
                assert!(((p - c[0]).norm() - r[0]).abs() < 1e-9);
                let fd = fd_tri(&c, &r, w);
                assert!((j - fd).norm() / fd.norm().max(1.0) < 1e-5);
            }
        }
    }

    #[test]
    fn covariance_matches_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = [v(0.0, 0.0), v(6.0, 1.0), v(1.0, 7.0)];
        let b = v(2.0, 3.0);
        let sd = [0.05, 0.08, 0.04];
        let r = [0, 1, 2].map(|i| (b - c[i]).norm());
        let t = trilaterate(&c, &r, &sd.map(|s| s * s)).unwrap();
        assert!((t.candidates[0].position - b).norm() < 1e-9);
        let n = 100_000;
        let mut mean = Vector2::zeros();
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let rn = [0, 1, 2].map(|i| r[i] + Normal::new(0.0, sd[i]).unwrap().sample(&mut rng));
            let p = trilaterate(&c, &rn, &[f64::INFINITY; 3]).unwrap().candidates[0].position;
            mean += p;
            samples.push(p);
        }
        mean /= n as f64;
        let mut cov = Matrix2::zeros();
        for p in &samples {
            cov += (p - mean) * (p - mean).transpose();
        }
        cov /= (n - 1) as f64;
        let rel = (cov - t.candidates[0].cov).norm() / t.candidates[0].cov.norm();
        assert!(rel < 0.1, "relative covariance error {rel}");
        // residual of each candidate against the circles stays within 3 sigma
        for i in 0..3 {
            let res = (t.candidates[0].position - c[i]).norm() - r[i];
            assert!(res.abs() < 1e-9);
        }
        let mut kept = 0;
        for _ in 0..2000 {
            let rn = [0, 1, 2].map(|i| r[i] + Normal::new(0.0, sd[i]).unwrap().sample(&mut rng));
            if let Ok(t) = trilaterate(&c, &rn, &sd.map(|s| s * s)) {
                kept += 1;
                for k in &t.candidates {
                    for i in 0..3 {
                        assert!(((k.position - c[i]).norm() - rn[i]).abs() <= 3.0 * sd[i]);
                    }
                }
            }
        }
        assert!(kept > 1900, "{kept}");
    }

    #[test]
    fn far_radical_center_is_rejected() {
        // nearly collinear poses with ranges that no single point satisfies
        let c = [v(0.0, 0.0), v(1.03, 0.0039), v(9.063, 0.044)];
        let r = [8.105, 1.817, 19.145];
        let vars = [0.0153, 0.0034, 0.0020];
        let (loose, deg) = trilaterate_jac(&c, &r, &[f64::INFINITY; 3]).unwrap();
        assert!(!deg);
        assert!(loose[0].0.norm() > 1000.0);
        assert_eq!(trilaterate(&c, &r, &vars), Err(MetricError::NoSolution));
    }
}
