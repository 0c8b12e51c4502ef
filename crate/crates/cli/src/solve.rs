use gkcm::maxclique::{max_disjoint_cliques, CliqueResult, Mode, SolverOptions, SolverRegistry, BRUTE_FORCE_MAX_N};
use serde::Serialize;

use crate::error::{read_file, CliError};
use crate::hcq;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Hypergraph file in hcq format.
    pub graph: String,
    /// exact, heuristic, kcore or bruteforce.
    #[arg(long, default_value = "heuristic")]
    pub solver: String,
    #[arg(long, env = "GKCM_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Resolve ties to the lexicographically smallest clique.
    #[arg(long)]
    pub deterministic: bool,
    /// Extract this many vertex-disjoint cliques (exact or heuristic only).
    #[arg(long, default_value_t = 1)]
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct CliqueRecord {
    /// 1-based vertices.
    pub clique: Vec<usize>,
    pub size: usize,
    pub valid: bool,
    pub solver: &'static str,
    pub wall_time_ms: f64,
    pub nodes_expanded: u64,
}

impl From<&CliqueResult> for CliqueRecord {
    fn from(r: &CliqueResult) -> Self {
        Self {
            clique: r.vertices.iter().map(|v| v + 1).collect(),
            size: r.size(),
            valid: r.is_valid_clique,
            solver: r.solver.as_str(),
            wall_time_ms: r.stats.wall_time.as_secs_f64() * 1e3,
            nodes_expanded: r.stats.nodes_expanded,
        }
    }
}

pub fn run(a: &Args) -> Result<(), CliError> {
    let g = hcq::parse(&read_file(&a.graph)?, &a.graph)?;
    let registry = SolverRegistry::default();
    let solver = registry.get(&a.solver).map_err(|_| {
        let names: Vec<_> = registry.names().collect();
        CliError::Usage(format!("unknown solver `{}` (choose from {})", a.solver, names.join(", ")))
    })?;
    if a.solver == "bruteforce" && g.n() > BRUTE_FORCE_MAX_N {
        return Err(CliError::Refused(format!(
            "bruteforce is limited to {BRUTE_FORCE_MAX_N} vertices, graph has {}",
            g.n()
        )));
    }
    let opts = SolverOptions {
        num_threads: a.threads,
        deterministic: a.deterministic,
        ..SolverOptions::default()
    };
    if a.count == 1 {
        let r = solver.solve(&g, &opts)?;
        println!("{}", serde_json::to_string(&CliqueRecord::from(&r)).expect("serializable"));
        return Ok(());
    }
    let mode = match a.solver.as_str() {
        "exact" => Mode::Exact,
        "heuristic" => Mode::Heuristic,
        s => return Err(CliError::Usage(format!("--count needs the exact or heuristic solver, not `{s}`"))),
    };
    let cliques = max_disjoint_cliques(&g, a.count, &opts.with_mode(mode))?;
    let records: Vec<CliqueRecord> = cliques.iter().map(CliqueRecord::from).collect();
    println!("{}", serde_json::json!({ "cliques": records }));
    Ok(())
}
