//! Range-only beacon consistency.
//!
//! The group-4 check trilaterates the beacon from three ranges and predicts
//! the fourth, once per held-out measurement. The group-2 (annulus overlap)
//! and group-3 (common intersection) checks are prefilters for hierarchical
//! builds; their tolerances are inflated by `kappa`, and the graph-level
//! group-4 check requires them too.

use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;

use nalgebra::{Matrix2, SVector, Vector2};

use crate::consistency::{GroupCheck, PairwiseScore, Verdict};

use super::lie::{PoseGroup, PoseWithCov, Se2, Tracked};
use super::measurement::RangeMeasurement;
use super::odometry::Odometry2;
use super::trilateration::trilaterate_jac;
use super::MetricError;

/// Inputs of a quadruple: three chained odometry segments (3 each), then
/// the four ranges.
pub const QUAD_INPUTS: usize = 13;
pub type QuadGradient = SVector<f64, QUAD_INPUTS>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSettings {
    /// Gate on the per-permutation 1-dof score.
    pub gamma: f64,
    /// Inflation of the group-2 and group-3 tolerances.
    pub kappa: f64,
    /// Pass a quadruple when any held-out permutation passes instead of all.
    pub any_permutation: bool,
    /// Treat beacon ids as unknown (data-association mode).
    pub ignore_beacons: bool,
}

impl Default for RangeSettings {
    fn default() -> Self {
        Self {
            gamma: 3.841_458_820_694_124,
            kappa: 3.0,
            any_permutation: false,
            ignore_beacons: false,
        }
    }
}

/// Relative geometry of up to four poses, gauged at the earliest one.
#[derive(Debug, Clone)]
pub struct QuadGeometry {
    pub segments: [PoseWithCov<Se2, 3>; 3],
    /// Chain position (0..=3) of each measurement's pose.
    pub slots: [usize; 4],
}

impl QuadGeometry {
    /// `None` when two measurements share a pose.
    pub fn new(odo: &Odometry2, poses: [usize; 4]) -> Option<Self> {
        let mut sorted = poses;
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        let segments = [0, 1, 2].map(|i| odo.segment(sorted[i], sorted[i + 1]));
        let slots = poses.map(|p| sorted.iter().position(|&q| q == p).unwrap());
        Some(Self { segments, slots })
    }

    fn quad_variance(&self, g: &QuadGradient, variances: &[f64; 4]) -> f64 {
        let mut var = 0.0;
        for s in 0..3 {
            let gs = g.fixed_rows::<3>(3 * s);
            var += (gs.transpose() * self.segments[s].cov * gs)[(0, 0)];
        }
        for (i, v) in variances.iter().enumerate() {
            var += g[9 + i] * g[9 + i] * v;
        }
        var
    }

    /// Residual and variance per trilateration candidate when `held_out` is
    /// predicted from the other three.
    pub fn permutation(
        &self,
        ranges: &[f64; 4],
        variances: &[f64; 4],
        held_out: usize,
    ) -> Result<Vec<(f64, f64)>, MetricError> {
        let segs = self.segments.map(|s| s.pose);
        let pos_vars = self.position_variances();
        let tol: [f64; 4] = std::array::from_fn(|i| variances[i] + pos_vars[self.slots[i]]);
        let res = permutation_residual(&segs, &self.slots, ranges, held_out, &tol)?;
        Ok(res
            .into_iter()
            .map(|(e, g)| (e, self.quad_variance(&g, variances)))
            .collect())
    }

    /// Smallest candidate score `e²/σ²` of one permutation; infinite when
    /// trilateration fails.
    pub fn permutation_score(&self, ranges: &[f64; 4], variances: &[f64; 4], held_out: usize) -> f64 {
        match self.permutation(ranges, variances, held_out) {
            Ok(c) => c
                .into_iter()
                .map(|(e, v)| if v > 0.0 { e * e / v } else if e == 0.0 { 0.0 } else { f64::INFINITY })
                .fold(f64::INFINITY, f64::min),
            Err(_) => f64::INFINITY,
        }
    }

    /// Trace of each chain pose's position covariance relative to the gauge.
    fn position_variances(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        let mut acc = PoseWithCov::<Se2, 3>::exact(Se2::identity());
        for s in 0..3 {
            acc = acc.compose(&self.segments[s]);
            out[s + 1] = acc.cov[(0, 0)] + acc.cov[(1, 1)];
        }
        out
    }
}

fn chain_positions(segs: &[Se2; 3]) -> [Tracked<Se2, 3, QUAD_INPUTS>; 4] {
    let p0 = Tracked::<Se2, 3, QUAD_INPUTS>::constant(Se2::identity());
    let p1 = p0.compose(&Tracked::input(segs[0], 0));
    let p2 = p1.compose(&Tracked::input(segs[1], 3));
    let p3 = p2.compose(&Tracked::input(segs[2], 6));
    [p0, p1, p2, p3]
}

/// Range residual `‖l − p_d‖ − r_d` of the held-out measurement against
/// each beacon candidate trilaterated from the other three, with its
/// gradient over the quadruple inputs (segment tangents, then ranges).
/// `tol_vars` set the trilateration tolerances.
pub fn permutation_residual(
    segs: &[Se2; 3],
    slots: &[usize; 4],
    ranges: &[f64; 4],
    held_out: usize,
    tol_vars: &[f64; 4],
) -> Result<Vec<(f64, QuadGradient)>, MetricError> {
    let chain = chain_positions(segs);
    let pos = |i: usize| {
        let p = &chain[slots[i]];
        (p.pose.t, p.jac.fixed_rows::<2>(0).into_owned())
    };
    let tri: Vec<usize> = (0..4).filter(|&i| i != held_out).collect();
    let centers = [0, 1, 2].map(|t| pos(tri[t]).0);
    let r3 = [0, 1, 2].map(|t| ranges[tri[t]]);
    let v3 = [0, 1, 2].map(|t| tol_vars[tri[t]]);
    let (cands, _) = trilaterate_jac(&centers, &r3, &v3)?;
    let (pd, jd) = pos(held_out);
    let mut out = Vec::with_capacity(cands.len());
    for (l, jt) in cands {
        // dl/dθ through the centers and the three ranges
        let mut dl = nalgebra::SMatrix::<f64, 2, QUAD_INPUTS>::zeros();
        for t in 0..3 {
            dl += jt.fixed_columns::<2>(2 * t) * pos(tri[t]).1;
            let mut col = dl.column_mut(9 + tri[t]);
            col += jt.column(6 + t);
        }
        let diff = l - pd;
        let h = diff.norm();
        let e = h - ranges[held_out];
        let mut g = QuadGradient::zeros();
        if h > 1e-12 {
            let u = diff / h;
            g = ((dl - jd).transpose() * u).into_owned();
        }
        g[9 + held_out] -= 1.0;
        out.push((e, g));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Group4Outcome {
    pub pass: bool,
    /// Maximum permutation score (minimum in any-permutation mode).
    pub score: f64,
    pub permutation_scores: [f64; 4],
}

fn same_beacon(ms: &[&RangeMeasurement], s: &RangeSettings) -> bool {
    s.ignore_beacons || ms.windows(2).all(|w| w[0].beacon_id == w[1].beacon_id)
}

/// The full group-4 check: all four held-out permutations are scored.
pub fn range_group4_metric(
    ms: &[RangeMeasurement; 4],
    odo: &Odometry2,
    s: &RangeSettings,
) -> Group4Outcome {
    let fail = Group4Outcome {
        pass: false,
        score: f64::INFINITY,
        permutation_scores: [f64::INFINITY; 4],
    };
    if !same_beacon(&ms.iter().collect::<Vec<_>>(), s) {
        return fail;
    }
    let Some(geo) = QuadGeometry::new(odo, ms.map(|m| m.pose_index)) else {
        return fail;
    };
    let ranges = ms.map(|m| m.range);
    let vars = ms.map(|m| m.variance);
    let scores: [f64; 4] = std::array::from_fn(|d| geo.permutation_score(&ranges, &vars, d));
    let (pass, score) = if s.any_permutation {
        let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
        (best <= s.gamma, best)
    } else {
        let worst = scores.iter().copied().fold(0.0, f64::max);
        (worst <= s.gamma, worst)
    };
    Group4Outcome {
        pass,
        score,
        permutation_scores: scores,
    }
}

/// Annulus-overlap prefilter: the two range circles can meet within
/// `kappa` combined standard deviations.
pub fn range_group2_metric(
    a: &RangeMeasurement,
    b: &RangeMeasurement,
    odo: &Odometry2,
    s: &RangeSettings,
) -> Verdict {
    if !same_beacon(&[a, b], s) {
        return Verdict::fail();
    }
    let seg = odo.segment(a.pose_index, b.pose_index);
    let d = seg.pose.t.norm();
    let std = (a.variance + b.variance + seg.cov[(0, 0)] + seg.cov[(1, 1)]).sqrt();
    let violation = (d - (a.range + b.range)).max((a.range - b.range).abs() - d).max(0.0);
    let z = if std > 0.0 { violation / std } else if violation > 0.0 { f64::INFINITY } else { 0.0 };
    Verdict::gate(z * z, s.kappa * s.kappa)
}

/// Common-intersection prefilter: the weighted least-squares misfit of the
/// three circles, gated at `3·kappa²`.
pub fn range_group3_metric(
    ms: [&RangeMeasurement; 3],
    odo: &Odometry2,
    s: &RangeSettings,
) -> Verdict {
    if !same_beacon(&ms, s) {
        return Verdict::fail();
    }
    let mut poses = ms.map(|m| m.pose_index);
    poses.sort_unstable();
    if poses[0] == poses[1] || poses[1] == poses[2] {
        return Verdict::fail();
    }
    let gauge = poses[0];
    let mut c = [Vector2::zeros(); 3];
    let mut w = [0.0; 3];
    for (i, m) in ms.iter().enumerate() {
        let seg = odo.segment(gauge, m.pose_index);
        c[i] = seg.pose.t;
        w[i] = 1.0 / (m.variance + seg.cov[(0, 0)] + seg.cov[(1, 1)]);
    }
    let r = ms.map(|m| m.range);
    let cost = circle_fit_cost(&c, &r, &w);
    Verdict::gate(cost, 3.0 * s.kappa * s.kappa)
}

/// Minimum of `Σ w_i (‖l − c_i‖ − r_i)²` over `l`, by Gauss-Newton from the
/// pairwise circle intersections and the linear trilateration solution.
pub fn circle_fit_cost(c: &[Vector2<f64>; 3], r: &[f64; 3], w: &[f64; 3]) -> f64 {
    let cost = |l: &Vector2<f64>| -> f64 {
        (0..3)
            .map(|i| {
                let e = (l - c[i]).norm() - r[i];
                w[i] * e * e
            })
            .sum()
    };
    let mut starts: Vec<Vector2<f64>> = Vec::with_capacity(8);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let dv = c[j] - c[i];
        let d = dv.norm();
        if d < 1e-12 {
            continue;
        }
        let e = dv / d;
        let a = (r[i] * r[i] - r[j] * r[j] + d * d) / (2.0 * d);
        let h = (r[i] * r[i] - a * a).max(0.0).sqrt();
        let n = Vector2::new(-e.y, e.x);
        starts.push(c[i] + a * e + h * n);
        starts.push(c[i] + a * e - h * n);
    }
    if let Ok((cands, _)) = trilaterate_jac(c, r, &[f64::INFINITY; 3]) {
        starts.extend(cands.into_iter().map(|(l, _)| l));
    }
    let mut best = f64::INFINITY;
    for mut l in starts {
        let mut f = cost(&l);
        for _ in 0..30 {
            let mut jtj = Matrix2::zeros();
            let mut jte = Vector2::zeros();
            for i in 0..3 {
                let dv = l - c[i];
                let n = dv.norm();
                if n < 1e-12 {
                    continue;
                }
                let g = dv / n;
                let e = n - r[i];
                jtj += w[i] * g * g.transpose();
                jte += w[i] * g * e;
            }
            let Some(step) = (jtj + Matrix2::identity() * 1e-12 * jtj.trace().max(1e-300))
                .try_inverse()
                .map(|inv| inv * jte)
            else {
                break;
            };
            // backtrack until the cost does not increase
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-4 {
                let cand = l - t * step;
                let fc = cost(&cand);
                if fc <= f {
                    l = cand;
                    moved = f - fc > 1e-14 * f.max(1e-300);
                    f = fc;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best = best.min(f);
    }
    best
}

/// Measurements to beacons along one trajectory, checked at orders 2–4.
pub struct RangeChecks<'a> {
    pub measurements: Vec<RangeMeasurement>,
    pub odometry: &'a Odometry2,
    pub settings: RangeSettings,
    /// Group-3 verdicts by sorted triple, shared by the order-3 and
    /// order-4 checks.
    triples: Mutex<FxHashMap<[usize; 3], Verdict>>,
}

impl<'a> RangeChecks<'a> {
    pub fn new(measurements: Vec<RangeMeasurement>, odometry: &'a Odometry2, settings: RangeSettings) -> Self {
        Self {
            measurements,
            odometry,
            settings,
            triples: Mutex::new(FxHashMap::default()),
        }
    }

    pub fn triple(&self, t: [usize; 3]) -> Verdict {
        let mut key = t;
        key.sort_unstable();
        if let Some(v) = self.triples.lock().expect("triple cache poisoned").get(&key) {
            return *v;
        }
        let m = &self.measurements;
        let v = range_group3_metric([&m[key[0]], &m[key[1]], &m[key[2]]], self.odometry, &self.settings);
        self.triples.lock().expect("triple cache poisoned").insert(key, v);
        v
    }

    /// Group-4 verdict that stops at the first failing check. A quadruple
    /// also needs its six pairs and four triples to pass, so the family is
    /// monotone and hierarchical builds find the same edges.
    pub fn quad(&self, t: &[usize]) -> Verdict {
        let ms: [&RangeMeasurement; 4] = std::array::from_fn(|i| &self.measurements[t[i]]);
        if !same_beacon(&ms, &self.settings) {
            return Verdict::fail();
        }
        let Some(geo) = QuadGeometry::new(self.odometry, ms.map(|m| m.pose_index)) else {
            return Verdict::fail();
        };
        for (a, b) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            if !range_group2_metric(ms[a], ms[b], self.odometry, &self.settings).pass {
                return Verdict::fail();
            }
        }
        let verdict = self.permutations(&geo, &ms);
        if !verdict.pass {
            return verdict;
        }
        // the circle fits are the most expensive part, so they go last
        for [a, b, c] in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
            if !self.triple([t[a], t[b], t[c]]).pass {
                return Verdict::fail();
            }
        }
        verdict
    }

    fn permutations(&self, geo: &QuadGeometry, ms: &[&RangeMeasurement; 4]) -> Verdict {
        let ranges = ms.map(|m| m.range);
        let vars = ms.map(|m| m.variance);
        let g = self.settings.gamma;
        if self.settings.any_permutation {
            let mut best = f64::INFINITY;
            for d in 0..4 {
                best = best.min(geo.permutation_score(&ranges, &vars, d));
                if best <= g {
                    return Verdict::gate(best, g);
                }
            }
            return Verdict::gate(best, g);
        }
        let mut worst: f64 = 0.0;
        for d in 0..4 {
            worst = worst.max(geo.permutation_score(&ranges, &vars, d));
            if worst > g {
                return Verdict::gate(worst, g);
            }
        }
        Verdict::gate(worst, g)
    }
}

/// Order-specific view of [`RangeChecks`].
pub struct RangeOrder<'a> {
    pub checks: Arc<RangeChecks<'a>>,
    pub order: usize,
}

impl GroupCheck for RangeOrder<'_> {
    fn order(&self) -> usize {
        self.order
    }
    fn check(&self, t: &[usize]) -> Verdict {
        let c = &*self.checks;
        let m = &c.measurements;
        match self.order {
            2 => range_group2_metric(&m[t[0]], &m[t[1]], c.odometry, &c.settings),
            3 => c.triple([t[0], t[1], t[2]]),
            _ => c.quad(t),
        }
    }
}

impl PairwiseScore for RangeChecks<'_> {
    fn len(&self) -> usize {
        self.measurements.len()
    }
    fn score(&self, u: usize, v: usize) -> f64 {
        range_group2_metric(&self.measurements[u], &self.measurements[v], self.odometry, &self.settings).score
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::testutil::rel_err;
    use nalgebra::{Matrix3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_odometry(q: f64) -> Odometry2 {
        let step = |x: f64, th: f64| PoseWithCov::new(Se2::new(x, 0.0, th), Matrix3::from_diagonal(&Vector3::new(q, q, q * 0.1)));
        let turn = std::f64::consts::FRAC_PI_2;
        Odometry2::from_steps(
            Se2::new(0.0, 0.0, 0.0),
            vec![step(4.0, turn), step(4.0, turn), step(4.0, turn), step(2.0, 0.0)],
        )
    }

    fn exact_ranges(odo: &Odometry2, beacon: Vector2<f64>, var: f64) -> Vec<RangeMeasurement> {
        (0..odo.len())
            .map(|i| RangeMeasurement {
                pose_index: i,
                beacon_id: 0,
                range: (odo.pose(i).t - beacon).norm(),
                variance: var,
            })
            .collect()
    }

    #[test]
    fn noise_free_quadruple_scores_zero() {
        let odo = square_odometry(1e-4);
        let ms = exact_ranges(&odo, Vector2::new(1.5, 7.0), 0.01);
        let quad = [ms[0], ms[1], ms[2], ms[3]];
        let out = range_group4_metric(&quad, &odo, &RangeSettings::default());
        assert!(out.pass);
        assert!(out.permutation_scores.iter().all(|&s| s < 1e-12), "{out:?}");
        let checks = Arc::new(RangeChecks::new(ms.clone(), &odo, RangeSettings::default()));
        assert!(RangeOrder { checks: checks.clone(), order: 4 }.check(&[0, 1, 2, 4]).pass);
        assert!(RangeOrder { checks: checks.clone(), order: 3 }.check(&[0, 2, 4]).pass);
        assert!(RangeOrder { checks: checks.clone(), order: 2 }.check(&[1, 3]).pass);
    }

    #[test]
    fn inflated_range_fails() {
        let odo = square_odometry(1e-4);
        let mut ms = exact_ranges(&odo, Vector2::new(1.5, 7.0), 0.01);
        ms[2].range += 10.0 * 0.1;
        let out = range_group4_metric(&[ms[0], ms[1], ms[2], ms[3]], &odo, &RangeSettings::default());
        assert!(!out.pass);
        assert!(out.score > RangeSettings::default().gamma);
    }

    #[test]
    fn beacon_mismatch_and_shared_pose_fail() {
        let odo = square_odometry(1e-4);
        let mut ms = exact_ranges(&odo, Vector2::new(1.5, 7.0), 0.01);
        ms[3].beacon_id = 1;
        let s = RangeSettings::default();
        assert!(!range_group4_metric(&[ms[0], ms[1], ms[2], ms[3]], &odo, &s).pass);
        let any = RangeSettings { ignore_beacons: true, ..s };
        assert!(range_group4_metric(&[ms[0], ms[1], ms[2], ms[3]], &odo, &any).pass);
        assert!(!range_group4_metric(&[ms[0], ms[1], ms[1], ms[3]], &odo, &s).pass);
    }

    #[test]
    fn pairwise_annulus() {
        let odo = square_odometry(1e-4);
        let s = RangeSettings::default();
        let m = |p: usize, r: f64| RangeMeasurement { pose_index: p, beacon_id: 0, range: r, variance: 0.01 };
        // same pose, equal ranges: concentric and overlapping
        assert!(range_group2_metric(&m(1, 3.0), &m(1, 3.0), &odo, &s).pass);
        // poses 4 m apart, radii far too small to meet
        assert!(!range_group2_metric(&m(0, 0.5), &m(1, 0.5), &odo, &s).pass);
        assert!(range_group2_metric(&m(0, 2.1), &m(1, 2.1), &odo, &s).pass);
        // one circle strictly inside the other
        assert!(!range_group2_metric(&m(0, 10.0), &m(1, 1.0), &odo, &s).pass);
    }

    #[test]
    fn group3_fit_cost() {
        let c = [Vector2::new(0.0, 0.0), Vector2::new(4.0, 0.0), Vector2::new(0.0, 4.0)];
        let b = Vector2::new(1.0, 1.0);
        let r = [0, 1, 2].map(|i| (b - c[i]).norm());
        assert!(circle_fit_cost(&c, &r, &[1.0; 3]) < 1e-16);
        let cost = circle_fit_cost(&c, &[r[0] + 1.0, r[1], r[2]], &[1.0; 3]);
        assert!(cost > 0.01 && cost < 1.0);
    }

    /// Gradient of the held-out residual against central differences over
    /// random geometries, including degenerate (collinear) ones.
    #[test]
    fn residual_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        for trial in 0..200 {
            let segs: [Se2; 3] = std::array::from_fn(|_| {
                if trial % 4 == 0 {
                    Se2::new(rng.random_range(1.0..3.0), 0.0, 0.0)
                } else {
                    Se2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
                }
            });
            let chain = chain_positions(&segs);
            let beacon = Vector2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            let slots = [0, 1, 2, 3];
            let ranges: [f64; 4] = std::array::from_fn(|i| (chain[i].pose.t - beacon).norm() + rng.random_range(-0.05..0.05));
            let held = trial % 4;
            let Ok(base) = permutation_residual(&segs, &slots, &ranges, held, &[f64::INFINITY; 4]) else {
                continue;
            };
            let eval = |d: &SVector<f64, QUAD_INPUTS>| -> Option<Vec<f64>> {
                let s2: [Se2; 3] = std::array::from_fn(|s| {
                    segs[s].perturb(&Vector3::new(d[3 * s], d[3 * s + 1], d[3 * s + 2]))
                });
                let r2: [f64; 4] = std::array::from_fn(|i| ranges[i] + d[9 + i]);
                permutation_residual(&s2, &slots, &r2, held, &[f64::INFINITY; 4])
                    .ok()
                    .map(|v| v.into_iter().map(|(e, _)| e).collect())
            };
            let h = 1e-6;
            for (ci, (_, g)) in base.iter().enumerate() {
                let mut fd = QuadGradient::zeros();
                let mut ok = true;
                for col in 0..QUAD_INPUTS {
                    let mut d = SVector::<f64, QUAD_INPUTS>::zeros();
                    d[col] = h;
                    match (eval(&d), eval(&-d)) {
                        (Some(p), Some(m)) if p.len() == base.len() && m.len() == base.len() => {
                            fd[col] = (p[ci] - m[ci]) / (2.0 * h);
                        }
                        _ => ok = false,
                    }
                }
                if ok {
                    assert!(rel_err(g, &fd) < 1e-5, "trial {trial}: {g} vs {fd}");
                    checked += 1;
                }
            }
        }
        assert!(checked >= 100, "only {checked} points checked");
    }
}
