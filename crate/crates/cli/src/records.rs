//! JSON-lines interchange for measurements and ground truth.
//!
//! Measurement files hold one record per line, tagged by `type`: `scalar`,
//! `relpose`, `range`, `bearing_rot`, plus one `odometry` record per robot
//! giving its start pose and relative steps. Only non-odometry records are
//! measurements; their order defines the measurement (vertex) index.
//! Rotations are an angle in 2D and a unit quaternion `[w, x, y, z]` in
//! 3D. Covariances list the lower triangle row by row.
//!
//! Truth files hold one `label` per measurement in the same order, plus
//! `state`, `poses`, `beacon`, `phantom` or `planted` records.

use gkcm::metrics::measurement::{
    RangeMeasurement, RelPoseMeasurement, ScalarMeasurement, ScalelessRelPoseMeasurement,
};
use gkcm::metrics::odometry::Odometry;
use gkcm::metrics::{ConsistencyProblem, Endpoint, Measurement, PoseGroup, PoseWithCov, Se2, Se3, Trajectory};
use gkcm::sim::{GroundTruth, LabeledMeasurementSet, RangeSource};
use nalgebra::{Quaternion, SMatrix, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RotationRec {
    Angle(f64),
    Quaternion([f64; 4]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRec {
    pub translation: Vec<f64>,
    pub rotation: RotationRec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRec {
    pub translation: Vec<f64>,
    pub rotation: RotationRec,
    pub cov: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurementRec {
    Scalar {
        value: f64,
        var: f64,
    },
    Relpose {
        from: [usize; 2],
        to: [usize; 2],
        translation: Vec<f64>,
        rotation: RotationRec,
        cov: Vec<f64>,
    },
    Range {
        pose: usize,
        beacon: usize,
        range: f64,
        var: f64,
    },
    BearingRot {
        from: [usize; 2],
        to: [usize; 2],
        az: f64,
        el: f64,
        rotation: [f64; 4],
        cov: Vec<f64>,
    },
    Odometry {
        robot: usize,
        start: PoseRec,
        steps: Vec<StepRec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRec {
    Beacon(usize),
    Phantom(usize),
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthRec {
    Label {
        inlier: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<SourceRec>,
    },
    State {
        value: f64,
    },
    Poses {
        robot: usize,
        poses: Vec<PoseRec>,
    },
    Beacon {
        position: [f64; 2],
    },
    Phantom {
        position: [f64; 2],
    },
    /// Planted-clique graphs: `n` vertices, planted set 1-based.
    Planted {
        n: usize,
        vertices: Vec<usize>,
    },
}

fn lower_triangle<const D: usize>(m: &SMatrix<f64, D, D>) -> Vec<f64> {
    (0..D).flat_map(|i| (0..=i).map(move |j| m[(i, j)])).collect()
}

fn from_lower_triangle<const D: usize>(v: &[f64]) -> Result<SMatrix<f64, D, D>, String> {
    if v.len() != D * (D + 1) / 2 {
        return Err(format!("covariance needs {} lower-triangle values, got {}", D * (D + 1) / 2, v.len()));
    }
    let mut m = SMatrix::<f64, D, D>::zeros();
    let mut it = v.iter();
    for i in 0..D {
        for j in 0..=i {
            let x = *it.next().expect("length checked");
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    Ok(m)
}

fn quaternion(q: &[f64; 4]) -> Result<UnitQuaternion<f64>, String> {
    let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
    if (raw.norm() - 1.0).abs() > 1e-6 {
        return Err(format!("quaternion norm {} is not 1", raw.norm()));
    }
    Ok(UnitQuaternion::from_quaternion(raw))
}

fn quat_rec(r: &nalgebra::Rotation3<f64>) -> [f64; 4] {
    let q = UnitQuaternion::from_rotation_matrix(r);
    [q.w, q.i, q.j, q.k]
}

fn se2_rec(p: &Se2) -> PoseRec {
    PoseRec {
        translation: vec![p.t.x, p.t.y],
        rotation: RotationRec::Angle(p.theta),
    }
}

fn se3_rec(p: &Se3) -> PoseRec {
    PoseRec {
        translation: p.t.iter().copied().collect(),
        rotation: RotationRec::Quaternion(quat_rec(&p.r)),
    }
}

fn se2_of(t: &[f64], r: &RotationRec) -> Result<Se2, String> {
    match (t, r) {
        ([x, y], RotationRec::Angle(a)) => Ok(Se2::new(*x, *y, *a)),
        _ => Err("2D pose needs a 2-vector translation and an angle".into()),
    }
}

fn se3_of(t: &[f64], r: &RotationRec) -> Result<Se3, String> {
    match (t, r) {
        ([x, y, z], RotationRec::Quaternion(q)) => {
            Ok(Se3::new(Vector3::new(*x, *y, *z), quaternion(q)?.to_rotation_matrix()))
        }
        _ => Err("3D pose needs a 3-vector translation and a quaternion".into()),
    }
}

fn endpoint(e: &[usize; 2]) -> Endpoint {
    Endpoint::new(e[0], e[1])
}

fn steps<G: PoseGroup<D>, const D: usize>(
    steps: &[StepRec],
    pose: impl Fn(&[f64], &RotationRec) -> Result<G, String>,
) -> Result<Vec<PoseWithCov<G, D>>, String> {
    steps
        .iter()
        .map(|s| Ok(PoseWithCov::new(pose(&s.translation, &s.rotation)?, from_lower_triangle(&s.cov)?)))
        .collect()
}

fn odometry_rec(robot: usize, t: &Trajectory) -> MeasurementRec {
    match t {
        Trajectory::Se2(o) => MeasurementRec::Odometry {
            robot,
            start: se2_rec(o.pose(0)),
            steps: o
                .steps()
                .iter()
                .map(|s| {
                    let p = se2_rec(&s.pose);
                    StepRec {
                        translation: p.translation,
                        rotation: p.rotation,
                        cov: lower_triangle(&s.cov),
                    }
                })
                .collect(),
        },
        Trajectory::Se3(o) => MeasurementRec::Odometry {
            robot,
            start: se3_rec(o.pose(0)),
            steps: o
                .steps()
                .iter()
                .map(|s| {
                    let p = se3_rec(&s.pose);
                    StepRec {
                        translation: p.translation,
                        rotation: p.rotation,
                        cov: lower_triangle(&s.cov),
                    }
                })
                .collect(),
        },
    }
}

fn measurement_rec(m: &Measurement) -> MeasurementRec {
    match m {
        Measurement::Scalar(s) => MeasurementRec::Scalar {
            value: s.value,
            var: s.variance,
        },
        Measurement::RelPose2(z) => {
            let p = se2_rec(&z.value.pose);
            MeasurementRec::Relpose {
                from: [z.from.robot, z.from.index],
                to: [z.to.robot, z.to.index],
                translation: p.translation,
                rotation: p.rotation,
                cov: lower_triangle(&z.value.cov),
            }
        }
        Measurement::RelPose3(z) => {
            let p = se3_rec(&z.value.pose);
            MeasurementRec::Relpose {
                from: [z.from.robot, z.from.index],
                to: [z.to.robot, z.to.index],
                translation: p.translation,
                rotation: p.rotation,
                cov: lower_triangle(&z.value.cov),
            }
        }
        Measurement::Range(r) => MeasurementRec::Range {
            pose: r.pose_index,
            beacon: r.beacon_id,
            range: r.range,
            var: r.variance,
        },
        Measurement::Scaleless(z) => MeasurementRec::BearingRot {
            from: [z.from.robot, z.from.index],
            to: [z.to.robot, z.to.index],
            az: z.azimuth,
            el: z.elevation,
            rotation: quat_rec(&z.rotation),
            cov: lower_triangle(&z.cov),
        },
    }
}

fn to_json_lines<T: Serialize>(records: impl IntoIterator<Item = T>) -> String {
    records
        .into_iter()
        .map(|r| serde_json::to_string(&r).expect("records serialize") + "\n")
        .collect()
}

pub fn write_problem(p: &ConsistencyProblem) -> String {
    let odo = p.trajectories.iter().enumerate().map(|(r, t)| odometry_rec(r, t));
    to_json_lines(odo.chain(p.measurements.iter().map(measurement_rec)))
}

/// Parses each non-blank line as `T`, reporting the 1-based line on error.
fn parse_lines<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> Result<Vec<(usize, T)>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|r| (i + 1, r))
                .map_err(|e| CliError::format(path, i + 1, e.to_string()))
        })
        .collect()
}

pub fn read_problem(text: &str, path: &str) -> Result<ConsistencyProblem, CliError> {
    let mut measurements = Vec::new();
    let mut trajectories: Vec<Option<Trajectory>> = Vec::new();
    for (line, rec) in parse_lines::<MeasurementRec>(text, path)? {
        let bad = |msg: String| CliError::format(path, line, msg);
        let m = match rec {
            MeasurementRec::Odometry { robot, start, steps: st } => {
                let t = if start.translation.len() == 2 {
                    let s = se2_of(&start.translation, &start.rotation).map_err(bad)?;
                    Trajectory::Se2(Odometry::from_steps(s, steps(&st, se2_of).map_err(bad)?))
                } else {
                    let s = se3_of(&start.translation, &start.rotation).map_err(bad)?;
                    Trajectory::Se3(Odometry::from_steps(s, steps(&st, se3_of).map_err(bad)?))
                };
                if trajectories.len() <= robot {
                    trajectories.resize_with(robot + 1, || None);
                }
                if trajectories[robot].replace(t).is_some() {
                    return Err(bad(format!("second odometry record for robot {robot}")));
                }
                continue;
            }
            MeasurementRec::Scalar { value, var } => Measurement::Scalar(ScalarMeasurement {
                value,
                variance: var,
            }),
            MeasurementRec::Range {
                pose,
                beacon,
                range,
                var,
            } => Measurement::Range(RangeMeasurement {
                pose_index: pose,
                beacon_id: beacon,
                range,
                variance: var,
            }),
            MeasurementRec::Relpose {
                from,
                to,
                translation,
                rotation,
                cov,
            } => {
                if translation.len() == 2 {
                    let pose = se2_of(&translation, &rotation).map_err(bad)?;
                    Measurement::RelPose2(RelPoseMeasurement {
                        from: endpoint(&from),
                        to: endpoint(&to),
                        value: PoseWithCov::new(pose, from_lower_triangle(&cov).map_err(bad)?),
                    })
                } else {
                    let pose = se3_of(&translation, &rotation).map_err(bad)?;
                    Measurement::RelPose3(RelPoseMeasurement {
                        from: endpoint(&from),
                        to: endpoint(&to),
                        value: PoseWithCov::new(pose, from_lower_triangle(&cov).map_err(bad)?),
                    })
                }
            }
            MeasurementRec::BearingRot {
                from,
                to,
                az,
                el,
                rotation,
                cov,
            } => Measurement::Scaleless(ScalelessRelPoseMeasurement {
                from: endpoint(&from),
                to: endpoint(&to),
                azimuth: az,
                elevation: el,
                rotation: quaternion(&rotation).map_err(bad)?.to_rotation_matrix(),
                cov: from_lower_triangle(&cov).map_err(bad)?,
            }),
        };
        m.validate().map_err(|e| bad(e.to_string()))?;
        measurements.push(m);
    }
    let trajectories = trajectories
        .into_iter()
        .enumerate()
        .map(|(r, t)| t.ok_or_else(|| CliError::input(path, format!("no odometry record for robot {r}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConsistencyProblem::new(measurements, trajectories))
}

pub fn write_truth(set: &LabeledMeasurementSet) -> String {
    let sources = match &set.truth {
        GroundTruth::Range { sources, .. } => Some(sources),
        _ => None,
    };
    let labels = set.inlier.iter().enumerate().map(|(i, &inlier)| TruthRec::Label {
        inlier,
        source: sources.map(|s| match s[i] {
            RangeSource::Beacon(b) => SourceRec::Beacon(b),
            RangeSource::Phantom(p) => SourceRec::Phantom(p),
            RangeSource::Random => SourceRec::Random,
        }),
    });
    let rest: Vec<TruthRec> = match &set.truth {
        GroundTruth::OneD { state } => vec![TruthRec::State { value: *state }],
        GroundTruth::Range {
            poses,
            beacons,
            phantoms,
            ..
        } => std::iter::once(TruthRec::Poses {
            robot: 0,
            poses: poses.iter().map(se2_rec).collect(),
        })
        .chain(beacons.iter().map(|b| TruthRec::Beacon { position: [b.x, b.y] }))
        .chain(phantoms.iter().map(|b| TruthRec::Phantom { position: [b.x, b.y] }))
        .collect(),
        GroundTruth::Visual { poses_a, poses_b } => [poses_a, poses_b]
            .into_iter()
            .enumerate()
            .map(|(robot, ps)| TruthRec::Poses {
                robot,
                poses: ps.iter().map(se3_rec).collect(),
            })
            .collect(),
    };
    to_json_lines(labels.chain(rest))
}

pub fn write_planted(n: usize, planted: &[usize]) -> String {
    let mut vertices: Vec<usize> = planted.iter().map(|v| v + 1).collect();
    vertices.sort_unstable();
    to_json_lines([TruthRec::Planted { n, vertices }])
}

/// Parsed truth file.
pub enum Truth {
    /// Labels plus the ground truth of a measurement world.
    World { inlier: Vec<bool>, truth: GroundTruth },
    /// Planted clique: labels over graph vertices.
    Planted { inlier: Vec<bool> },
}

pub fn read_truth(text: &str, path: &str) -> Result<Truth, CliError> {
    let mut labels = Vec::new();
    let mut sources = Vec::new();
    let mut state = None;
    let mut poses2: Vec<Vec<Se2>> = Vec::new();
    let mut poses3: Vec<Vec<Se3>> = Vec::new();
    let (mut beacons, mut phantoms) = (Vec::new(), Vec::new());
    for (line, rec) in parse_lines::<TruthRec>(text, path)? {
        let bad = |msg: String| CliError::format(path, line, msg);
        match rec {
            TruthRec::Planted { n, vertices } => {
                let mut inlier = vec![false; n];
                for v in vertices {
                    if v == 0 || v > n {
                        return Err(bad(format!("planted vertex {v} outside 1..={n}")));
                    }
                    inlier[v - 1] = true;
                }
                return Ok(Truth::Planted { inlier });
            }
            TruthRec::Label { inlier, source } => {
                labels.push(inlier);
                sources.push(match source {
                    Some(SourceRec::Beacon(b)) => RangeSource::Beacon(b),
                    Some(SourceRec::Phantom(p)) => RangeSource::Phantom(p),
                    _ => RangeSource::Random,
                });
            }
            TruthRec::State { value } => state = Some(value),
            TruthRec::Poses { robot, poses } => {
                let three_d = poses.first().is_some_and(|p| p.translation.len() == 3);
                if three_d {
                    let ps = poses.iter().map(|p| se3_of(&p.translation, &p.rotation)).collect::<Result<_, _>>();
                    if poses3.len() <= robot {
                        poses3.resize(robot + 1, Vec::new());
                    }
                    poses3[robot] = ps.map_err(bad)?;
                } else {
                    let ps = poses.iter().map(|p| se2_of(&p.translation, &p.rotation)).collect::<Result<_, _>>();
                    if poses2.len() <= robot {
                        poses2.resize(robot + 1, Vec::new());
                    }
                    poses2[robot] = ps.map_err(bad)?;
                }
            }
            TruthRec::Beacon { position } => beacons.push(Vector2::from(position)),
            TruthRec::Phantom { position } => phantoms.push(Vector2::from(position)),
        }
    }
    let truth = if let Some(state) = state {
        GroundTruth::OneD { state }
    } else if poses3.len() == 2 {
        let mut it = poses3.into_iter();
        GroundTruth::Visual {
            poses_a: it.next().expect("two robots"),
            poses_b: it.next().expect("two robots"),
        }
    } else if poses2.len() == 1 {
        GroundTruth::Range {
            poses: poses2.remove(0),
            beacons,
            phantoms,
            sources,
        }
    } else {
        return Err(CliError::input(path, "no state, 2D poses or two 3D trajectories in truth file"));
    };
    Ok(Truth::World { inlier: labels, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gkcm::sim::{generate, WorldSpec};

    #[test]
    fn covariance_triangle_layout() {
        let m = nalgebra::Matrix3::new(1.0, 2.0, 4.0, 2.0, 3.0, 5.0, 4.0, 5.0, 6.0);
        let v = lower_triangle(&m);
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(from_lower_triangle::<3>(&v).unwrap(), m);
        assert!(from_lower_triangle::<3>(&v[..5]).is_err());
    }

    #[test]
    fn simulated_worlds_survive_a_file_round_trip() {
        for spec in [WorldSpec::range2d(12, 4, 1), WorldSpec::visual3d(2)] {
            let set = generate(&spec).unwrap();
            let text = write_problem(&set.problem);
            let back = read_problem(&text, "m").unwrap();
            assert_eq!(back.measurements.len(), set.problem.measurements.len());
            for (a, b) in back.measurements.iter().zip(&set.problem.measurements) {
                assert_eq!(a.kind(), b.kind());
                if let (Measurement::Scaleless(x), Measurement::Scaleless(y)) = (a, b) {
                    assert!((x.rotation.matrix() - y.rotation.matrix()).norm() < 1e-12);
                    assert!((x.cov - y.cov).norm() < 1e-15);
                }
                if let (Measurement::Range(x), Measurement::Range(y)) = (a, b) {
                    assert_eq!(x, y);
                }
            }
            let Truth::World { inlier, .. } = read_truth(&write_truth(&set), "t").unwrap() else {
                panic!("expected world truth");
            };
            assert_eq!(inlier, set.inlier);
        }
    }

    #[test]
    fn bad_records_report_their_line() {
        let cases = [
            ("{\"type\":\"range\",\"pose\":0,\"beacon\":0,\"range\":1.0}\n", 1, "var"),
            ("\n{\"type\":\"scalar\",\"value\":1.0,\"var\":-1.0}\n", 2, "variance"),
            (
                "{\"type\":\"bearing_rot\",\"from\":[0,0],\"to\":[1,0],\"az\":0,\"el\":0,\"rotation\":[2,0,0,0],\"cov\":[]}\n",
                1,
                "norm",
            ),
            ("{\"type\":\"teleport\"}\n", 1, "unknown variant"),
        ];
        for (text, line, needle) in cases {
            match read_problem(text, "m") {
                Err(CliError::Format { line: l, msg, .. }) => {
                    assert_eq!(l, line, "{msg}");
                    assert!(msg.contains(needle), "{msg}");
                }
                Err(e) => panic!("{text:?}: {e}"),
                Ok(_) => panic!("{text:?}: accepted"),
            }
        }
    }
}
