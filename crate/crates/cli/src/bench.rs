use std::fmt::Write;
use std::time::Instant;

use clap::{Subcommand, ValueEnum};
use gkcm::consistency::{build_graph_batch, BuildOptions, CheckFamily, ConsistencyGraphBuilder, FnCheck};
use gkcm::maxclique::{max_clique_heuristic, max_clique_incremental, CliqueResult, Mode, SolverKind, SolverOptions};
use gkcm::metrics::{MetricConfig, MetricRegistry};
use gkcm::sim::{generate, LabeledMeasurementSet, WorldSpec};

use crate::error::{write_file, CliError};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(subcommand)]
    pub sweep: Sweep,
}

#[derive(Debug, Subcommand)]
pub enum Sweep {
    /// Graph build time on range worlds for direct and filtered builds.
    Hierarchy(SweepArgs),
    /// Time to add the last measurement incrementally vs a batch build and solve.
    Incremental(SweepArgs),
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 30)]
    pub m_min: usize,
    #[arg(long, default_value_t = 110)]
    pub m_max: usize,
    #[arg(long, default_value_t = 10)]
    pub m_step: usize,
    /// Worlds per configuration; each uses the next seed.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of corrupted measurements.
    #[arg(long, default_value_t = 0.8)]
    pub outlier_fraction: f64,
    #[arg(long, value_enum, num_args = 1.., value_delimiter = ',')]
    pub modes: Option<Vec<HierarchyMode>>,
    #[arg(long, env = "GKCM_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// CSV destination; standard output when absent.
    #[arg(short, long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HierarchyMode {
    #[value(name = "g4")]
    G4,
    #[value(name = "g3+g4")]
    G3G4,
    #[value(name = "g2+g3+g4")]
    G2G3G4,
}

impl HierarchyMode {
    fn name(self) -> &'static str {
        match self {
            HierarchyMode::G4 => "g4",
            HierarchyMode::G3G4 => "g3+g4",
            HierarchyMode::G2G3G4 => "g2+g3+g4",
        }
    }

    fn orders(self) -> &'static [usize] {
        match self {
            HierarchyMode::G4 => &[],
            HierarchyMode::G3G4 => &[3],
            HierarchyMode::G2G3G4 => &[2, 3],
        }
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn world(m: usize, a: &SweepArgs, r: usize) -> Result<LabeledMeasurementSet, CliError> {
    let outliers = (m as f64 * a.outlier_fraction).round() as usize;
    Ok(generate(&WorldSpec::range2d(m, outliers.min(m), a.seed + r as u64))?)
}

fn build_ms(set: &LabeledMeasurementSet, mode: HierarchyMode, threads: usize) -> Result<f64, CliError> {
    let registry = MetricRegistry::default();
    let metric = registry.get("range")?;
    let cfg = MetricConfig {
        lower_orders: true,
        ..MetricConfig::default()
    };
    let full = metric.family(&set.problem, &cfg)?;
    let k = full.k();
    let borrow = |j: usize| {
        let c = full.check(j).expect("range family has orders 2..=4");
        Box::new(FnCheck::new(j, move |t: &[usize]| c.check(t)))
    };
    let mut family = CheckFamily::new(full.len(), borrow(k), full.threshold(k));
    for &j in mode.orders() {
        family = family.with_lower(borrow(j), full.threshold(j))?;
    }
    let opts = BuildOptions::default()
        .hierarchical(mode != HierarchyMode::G4)
        .with_threads(threads);
    let start = Instant::now();
    build_graph_batch(&family, &opts)?;
    Ok(start.elapsed().as_secs_f64() * 1e3)
}

/// Milliseconds for the last incremental step and for a batch build + solve.
fn incremental_ms(set: &LabeledMeasurementSet, threads: usize) -> Result<(f64, f64), CliError> {
    let registry = MetricRegistry::default();
    let metric = registry.get("range")?;
    let cfg = MetricConfig {
        lower_orders: true,
        ..MetricConfig::default()
    };
    let family = metric.family(&set.problem, &cfg)?;
    let build = BuildOptions::default().hierarchical(true).with_threads(threads);
    let solve = SolverOptions::default().with_threads(threads).with_mode(Mode::Heuristic);
    let mut b = ConsistencyGraphBuilder::new(family.k(), build.clone())?;
    let mut prev = CliqueResult::empty(SolverKind::Incremental);
    let mut last = 0.0;
    for v in 0..family.len() {
        let start = Instant::now();
        b.push(&family)?;
        prev = max_clique_incremental(b.graph(), &prev, v, &solve)?;
        last = start.elapsed().as_secs_f64() * 1e3;
    }
    let start = Instant::now();
    let (g, _) = build_graph_batch(&family, &build)?;
    max_clique_heuristic(&g, &solve)?;
    Ok((last, start.elapsed().as_secs_f64() * 1e3))
}

pub fn run(a: &Args) -> Result<(), CliError> {
    let s = match &a.sweep {
        Sweep::Hierarchy(s) | Sweep::Incremental(s) => s,
    };
    if s.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    if s.m_step == 0 || s.m_min > s.m_max {
        return Err(CliError::Usage("need --m-step > 0 and --m-min <= --m-max".into()));
    }
    if !(0.0..=1.0).contains(&s.outlier_fraction) {
        return Err(CliError::Usage("--outlier-fraction must lie in [0, 1]".into()));
    }
    let mut csv = String::from("config,mode,mean_ms,std_ms\n");
    for m in (s.m_min..=s.m_max).step_by(s.m_step) {
        let worlds = (0..s.repeats).map(|r| world(m, s, r)).collect::<Result<Vec<_>, _>>()?;
        let mut rows: Vec<(&str, Vec<f64>)> = Vec::new();
        match &a.sweep {
            Sweep::Hierarchy(_) => {
                let modes = s
                    .modes
                    .clone()
                    .unwrap_or_else(|| vec![HierarchyMode::G4, HierarchyMode::G3G4, HierarchyMode::G2G3G4]);
                for mode in modes {
                    let times = worlds.iter().map(|w| build_ms(w, mode, s.threads)).collect::<Result<_, _>>()?;
                    rows.push((mode.name(), times));
                }
            }
            Sweep::Incremental(_) => {
                let pairs = worlds.iter().map(|w| incremental_ms(w, s.threads)).collect::<Result<Vec<_>, _>>()?;
                rows.push(("incremental", pairs.iter().map(|p| p.0).collect()));
                rows.push(("batch", pairs.iter().map(|p| p.1).collect()));
            }
        }
        for (mode, times) in rows {
            let (mean, std) = mean_std(&times);
            let _ = writeln!(csv, "{m},{mode},{mean:.3},{std:.3}");
        }
    }
    match &s.out {
        Some(p) => write_file(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
