//! Maximum-clique solvers over k-uniform hypergraphs.
//!
//! Every solver implements [`MaxCliqueSolver`] and can be looked up by name in
//! a [`SolverRegistry`]. The incremental and disjoint-extraction entry points
//! are free functions because they take extra inputs.

mod brute;
mod disjoint;
mod exact;
mod heuristic;
mod incremental;
mod kcore;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use thiserror::Error;

use crate::hypergraph::Hypergraph;

pub use brute::{brute_force_max_clique, BruteForceSolver, BRUTE_FORCE_MAX_N};
pub use disjoint::max_disjoint_cliques;
pub use exact::{max_clique_exact, ExactSolver};
pub use heuristic::{max_clique_heuristic, HeuristicSolver};
pub use incremental::max_clique_incremental;
pub use kcore::{core_numbers, max_kcore_approx, KCoreSolver};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("brute force is limited to {limit} vertices, graph has {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("previous clique is not a valid clique below vertex {0}")]
    InvalidPrevious(usize),
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("num_threads must be at least 1")]
    NoThreads,
    #[error("unknown solver `{0}`")]
    UnknownSolver(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Exact,
    Heuristic,
    Kcore,
    Bruteforce,
    Incremental,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::Heuristic => "heuristic",
            SolverKind::Kcore => "kcore",
            SolverKind::Bruteforce => "bruteforce",
            SolverKind::Incremental => "incremental",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Search flavor used by the incremental and multi-clique drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Exact,
    Heuristic,
}

impl FromStr for Mode {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "heuristic" => Ok(Mode::Heuristic),
            other => Err(SolveError::UnknownSolver(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub num_threads: usize,
    /// Resolve equal-size cliques to the lexicographically smallest vertex
    /// list so results do not depend on thread scheduling.
    pub deterministic: bool,
    pub mode: Mode,
    pub track_stats: bool,
    /// Degree and size pruning in the exact search. Only turned off by
    /// differential tests.
    pub prune: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            num_threads: 1,
            deterministic: false,
            mode: Mode::Exact,
            track_stats: true,
            prune: true,
        }
    }
}

impl SolverOptions {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_threads(mut self, n: usize) -> Self {
        self.num_threads = n;
        self
    }

    pub fn deterministic(mut self, on: bool) -> Self {
        self.deterministic = on;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueResult {
    /// Sorted vertex indices. Empty when no clique of at least k vertices exists.
    pub vertices: Vec<usize>,
    pub is_valid_clique: bool,
    pub solver: SolverKind,
    pub stats: SearchStats,
}

impl CliqueResult {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    /// The empty clique, a valid starting point for incremental updates.
    pub fn empty(solver: SolverKind) -> Self {
        Self {
            vertices: Vec::new(),
            is_valid_clique: true,
            solver,
            stats: SearchStats::default(),
        }
    }

    /// Normalizes a raw vertex set: sorts it, drops sub-k sets and sets the
    /// validity flag from an explicit definition check.
    pub(crate) fn from_vertices(
        g: &Hypergraph,
        mut vertices: Vec<usize>,
        solver: SolverKind,
        stats: SearchStats,
    ) -> Self {
        vertices.sort_unstable();
        if vertices.len() < g.k() {
            vertices.clear();
        }
        let is_valid_clique = vertices.is_empty() || g.is_clique(&vertices);
        Self {
            vertices,
            is_valid_clique,
            solver,
            stats,
        }
    }
}

/// A named maximum-clique strategy.
pub trait MaxCliqueSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, g: &Hypergraph, opts: &SolverOptions) -> Result<CliqueResult, SolveError>;
}

/// Name-indexed collection of solvers.
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn MaxCliqueSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, solver: Box<dyn MaxCliqueSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn MaxCliqueSolver, SolveError> {
        self.solvers
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| SolveError::UnknownSolver(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ExactSolver));
        r.register(Box::new(HeuristicSolver));
        r.register(Box::new(KCoreSolver));
        r.register(Box::new(BruteForceSolver));
        r
    }
}

/// Best clique seen so far, shared between root workers.
pub(crate) struct Incumbent {
    size: AtomicUsize,
    best: Mutex<Vec<usize>>,
    deterministic: bool,
    nodes: AtomicU64,
}

impl Incumbent {
    pub(crate) fn new(initial: Vec<usize>, deterministic: bool) -> Self {
        Self {
            size: AtomicUsize::new(initial.len()),
            best: Mutex::new(initial),
            deterministic,
            nodes: AtomicU64::new(0),
        }
    }

    #[inline]
    pub(crate) fn size(&self) -> usize {
        self.size.load(Ordering::Relaxed)
    }

    /// Smallest clique size still worth exploring.
    #[inline]
    pub(crate) fn target(&self) -> usize {
        let s = self.size();
        if self.deterministic {
            s
        } else {
            s + 1
        }
    }

    pub(crate) fn offer(&self, clique: &[usize]) {
        let len = clique.len();
        let cur = self.size();
        if len < cur || (len == cur && !self.deterministic) {
            return;
        }
        let mut sorted = clique.to_vec();
        sorted.sort_unstable();
        let mut best = self.best.lock().expect("incumbent lock poisoned");
        let better = sorted.len() > best.len()
            || (self.deterministic && sorted.len() == best.len() && sorted < *best);
        if better {
            self.size.store(sorted.len(), Ordering::Relaxed);
            *best = sorted;
        }
    }

    pub(crate) fn add_nodes(&self, n: u64) {
        self.nodes.fetch_add(n, Ordering::Relaxed);
    }

    pub(crate) fn into_parts(self) -> (Vec<usize>, u64) {
        (
            self.best.into_inner().expect("incumbent lock poisoned"),
            self.nodes.into_inner(),
        )
    }
}

/// Runs `per_root` for every vertex in `roots`, in order on one thread or
/// spread over a rayon pool.
pub(crate) fn for_each_root<F>(roots: &[usize], num_threads: usize, per_root: F)
where
    F: Fn(usize) + Send + Sync,
{
    if num_threads <= 1 {
        roots.iter().for_each(|&r| per_root(r));
        return;
    }
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new()
        .num_threads(num_threads)
        .build()
    {
        Ok(pool) => pool.install(|| roots.par_iter().for_each(|&r| per_root(r))),
        Err(_) => roots.iter().for_each(|&r| per_root(r)),
    }
}

/// `true` iff every tuple in `tuples` is in `E(q)`.
#[inline]
pub(crate) fn contains_all(g: &Hypergraph, q: usize, tuples: &[crate::Tuple]) -> bool {
    tuples.iter().all(|t| g.edge_set_contains(q, t))
}

/// The (k-1)-subsets of `s`, each sorted.
pub(crate) fn subsets_sorted(s: &[usize], r: usize) -> Vec<crate::Tuple> {
    let mut out = Vec::new();
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    crate::combinations::for_each_subset(&sorted, r, |c| {
        out.push(c.iter().copied().collect());
        true
    });
    out
}

/// Tuples `p ∪ {u}` for every `(k-2)`-subset `p` of `s`, each sorted.
pub(crate) fn extension_tuples(s: &[usize], u: usize, k: usize) -> Vec<crate::Tuple> {
    let mut out = subsets_sorted(s, k - 2);
    for t in &mut out {
        let pos = t.partition_point(|&w| w < u);
        t.insert(pos, u);
    }
    out
}
