use std::collections::BTreeMap;
use std::time::Instant;

use gkcm::consistency::{build_graph_batch, BuildOptions, BuildStats, ConsistencyGraphBuilder};
use gkcm::metrics::{MetricConfig, MetricRegistry};
use serde::Serialize;

use crate::error::{read_file, write_file, CliError};
use crate::{hcq, records};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Measurement file (JSON lines).
    pub measurements: String,
    /// Consistency metric by name.
    #[arg(long)]
    pub metric: String,
    /// Expected group size; must match the metric's order.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Tolerance inflation of the range prefilters.
    #[arg(long, default_value_t = 3.0)]
    pub kappa: f64,
    /// Range: pass a quadruple when any held-out permutation passes.
    #[arg(long)]
    pub any_permutation: bool,
    /// Range: ignore beacon ids (data association).
    #[arg(long)]
    pub association: bool,
    /// Filter with the metric's lower-order checks first.
    #[arg(long)]
    pub hierarchical: bool,
    /// Add measurements one at a time in file order.
    #[arg(long)]
    pub incremental: bool,
    #[arg(long, env = "GKCM_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Output hypergraph file.
    #[arg(short, long)]
    pub out: String,
}

#[derive(Debug, Serialize)]
struct BuildRecord {
    vertices: usize,
    edges: usize,
    k: usize,
    gamma: f64,
    /// Checks performed per order.
    checks: BTreeMap<usize, u64>,
    /// Order-k checks a direct batch build needs.
    budget: u64,
    wall_time_ms: f64,
}

pub fn run(a: &Args) -> Result<(), CliError> {
    let problem = records::read_problem(&read_file(&a.measurements)?, &a.measurements)?;
    let registry = MetricRegistry::default();
    let metric = registry.get(&a.metric).map_err(|_| {
        let names: Vec<_> = registry.names().collect();
        CliError::Usage(format!("unknown metric `{}` (choose from {})", a.metric, names.join(", ")))
    })?;
    let k = metric.order();
    if a.k.is_some_and(|x| x != k) {
        return Err(CliError::Usage(format!("metric `{}` has order {k}, not {}", a.metric, a.k.unwrap())));
    }
    let cfg = MetricConfig {
        confidence: a.confidence,
        kappa: a.kappa,
        any_permutation: a.any_permutation,
        association_mode: a.association,
        lower_orders: a.hierarchical,
    };
    let gamma = metric.threshold(&problem, &cfg)?;
    let family = metric
        .family(&problem, &cfg)
        .map_err(|e| CliError::input(&a.measurements, e))?;
    let opts = BuildOptions::default().hierarchical(a.hierarchical).with_threads(a.threads);
    let start = Instant::now();
    let (graph, stats): (_, BuildStats) = if a.incremental {
        let mut b = ConsistencyGraphBuilder::new(k, opts)?;
        for _ in 0..family.len() {
            b.push(&family)?;
        }
        let stats = b.stats().clone();
        (b.into_graph(), stats)
    } else {
        build_graph_batch(&family, &opts)?
    };
    let wall = start.elapsed();
    let header = vec![
        "gkcm consistency graph".to_string(),
        format!("metric {} k {k}", a.metric),
        format!("confidence {} dof {} gamma {gamma:.6}", a.confidence, metric.dof(&problem)),
    ];
    write_file(&a.out, &hcq::write(&graph, &header))?;
    let record = BuildRecord {
        vertices: graph.n(),
        edges: graph.edge_count(),
        k,
        gamma,
        checks: (2..=k).map(|j| (j, stats.checks_at(j))).filter(|c| c.1 > 0).collect(),
        budget: stats.budget,
        wall_time_ms: wall.as_secs_f64() * 1e3,
    };
    println!("{}", serde_json::to_string(&record).expect("serializable"));
    Ok(())
}
