use clap::ValueEnum;
use gkcm::sim::{gen_planted_clique_graph, generate, OutlierSpec, TrajectoryKind, WorldSpec};

use crate::error::{write_file, CliError};
use crate::{hcq, records};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    OneD,
    Range2d,
    Visual3d,
    Planted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Path {
    Manhattan,
    Circle,
    Line,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Output prefix: writes `<out>.measurements.jsonl` and `<out>.truth.jsonl`
    /// (`<out>.hcq` and `<out>.truth.jsonl` for planted graphs).
    #[arg(short, long)]
    pub out: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Poses per robot (inlier observations in 1D worlds).
    #[arg(long)]
    pub poses: Option<usize>,
    #[arg(long)]
    pub outliers: Option<usize>,
    #[arg(long)]
    pub beacons: Option<usize>,
    /// Visual worlds: inter-robot measurements.
    #[arg(long)]
    pub measurements: Option<usize>,
    #[arg(long, value_enum)]
    pub trajectory: Option<Path>,
    #[arg(long)]
    pub range_std: Option<f64>,
    #[arg(long)]
    pub odom_trans_std: Option<f64>,
    #[arg(long)]
    pub odom_rot_std: Option<f64>,
    #[arg(long)]
    pub angle_std: Option<f64>,
    /// Exact measurements and odometry; covariances unchanged.
    #[arg(long)]
    pub noiseless: bool,
    /// Planted graphs: vertex count.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Planted graphs: edge arity.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Planted graphs: planted clique size.
    #[arg(long, default_value_t = 10)]
    pub clique: usize,
    /// Planted graphs: fraction of all k-subsets that are edges.
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
}

fn spec(a: &Args) -> WorldSpec {
    let outliers = a.outliers.unwrap_or(0);
    let mut s = match a.kind {
        Kind::OneD => WorldSpec::one_d(a.poses.unwrap_or(10), OutlierSpec::split(outliers), a.seed),
        Kind::Range2d => WorldSpec::range2d(a.poses.unwrap_or(75), outliers, a.seed),
        Kind::Planted => unreachable!("planted graphs have no world spec"),
        Kind::Visual3d => {
            let mut s = WorldSpec::visual3d(a.seed);
            if let Some(o) = a.outliers {
                s.outliers = OutlierSpec {
                    n_random: o,
                    n_clustered: 0,
                    cluster_size: 1,
                };
            }
            if let Some(p) = a.poses {
                s.n_poses = p;
            }
            s
        }
    };
    if let Some(b) = a.beacons {
        s.n_beacons = b;
    }
    if let Some(m) = a.measurements {
        s.n_measurements = m;
    }
    if let Some(t) = a.trajectory {
        s.trajectory = match t {
            Path::Manhattan => TrajectoryKind::Manhattan,
            Path::Circle => TrajectoryKind::Circle,
            Path::Line => TrajectoryKind::Line,
        };
    }
    let n = &mut s.noise;
    n.measurement_std = a.range_std.unwrap_or(n.measurement_std);
    n.odometry_trans_std = a.odom_trans_std.unwrap_or(n.odometry_trans_std);
    n.odometry_rot_std = a.odom_rot_std.unwrap_or(n.odometry_rot_std);
    n.angle_std = a.angle_std.unwrap_or(n.angle_std);
    n.sample = !a.noiseless;
    s
}

pub fn run(a: &Args) -> Result<(), CliError> {
    let truth_path = format!("{}.truth.jsonl", a.out);
    if a.kind == Kind::Planted {
        let p = gen_planted_clique_graph(a.n, a.k, a.clique, a.density, a.seed)?;
        let graph_path = format!("{}.hcq", a.out);
        let header = vec![format!(
            "planted clique n {} k {} size {} density {} seed {}",
            a.n, a.k, a.clique, a.density, a.seed
        )];
        write_file(&graph_path, &hcq::write(&p.graph, &header))?;
        write_file(&truth_path, &records::write_planted(a.n, &p.planted))?;
        println!(
            "{}",
            serde_json::json!({
                "graph": graph_path,
                "truth": truth_path,
                "edges": p.graph.edge_count(),
                "density_clamped": p.density_clamped,
            })
        );
        return Ok(());
    }
    let set = generate(&spec(a))?;
    let meas_path = format!("{}.measurements.jsonl", a.out);
    write_file(&meas_path, &records::write_problem(&set.problem))?;
    write_file(&truth_path, &records::write_truth(&set))?;
    println!(
        "{}",
        serde_json::json!({
            "measurements": meas_path,
            "truth": truth_path,
            "count": set.len(),
            "inliers": set.inlier_indices().len(),
        })
    );
    Ok(())
}
