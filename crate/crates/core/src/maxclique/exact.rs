use std::time::Instant;

use super::{
    contains_all, extension_tuples, for_each_root, subsets_sorted, CliqueResult, Incumbent,
    MaxCliqueSolver, SearchStats, SolveError, SolverKind, SolverOptions,
};
use crate::hypergraph::Hypergraph;

/// Branch-and-bound search seeded from every edge of every vertex.
pub struct ExactSolver;

impl MaxCliqueSolver for ExactSolver {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn solve(&self, g: &Hypergraph, opts: &SolverOptions) -> Result<CliqueResult, SolveError> {
        max_clique_exact(g, opts)
    }
}

pub fn max_clique_exact(g: &Hypergraph, opts: &SolverOptions) -> Result<CliqueResult, SolveError> {
    if opts.num_threads == 0 {
        return Err(SolveError::NoThreads);
    }
    let start = Instant::now();
    let inc = Incumbent::new(Vec::new(), opts.deterministic);
    let roots: Vec<usize> = (0..g.n()).collect();
    for_each_root(&roots, opts.num_threads, |i| {
        let nodes = search_root(g, i, |w| w > i, &inc, opts.prune);
        inc.add_nodes(nodes);
    });
    let (best, nodes) = inc.into_parts();
    let stats = SearchStats {
        nodes_expanded: if opts.track_stats { nodes } else { 0 },
        wall_time: start.elapsed(),
    };
    Ok(CliqueResult::from_vertices(g, best, SolverKind::Exact, stats))
}

/// Explores every clique containing `root` whose other members satisfy
/// `allow`. Returns the number of search nodes expanded.
pub(crate) fn search_root<A>(
    g: &Hypergraph,
    root: usize,
    allow: A,
    inc: &Incumbent,
    prune: bool,
) -> u64
where
    A: Fn(usize) -> bool,
{
    let k = g.k();
    let mut nodes = 0u64;
    if prune && g.deg(root) + 1 < inc.size() {
        return 0;
    }
    for e in g.edges_of(root) {
        if !e.iter().all(|&w| allow(w)) {
            continue;
        }
        let mut s: Vec<usize> = e.to_vec();
        s.push(root);
        let r = subsets_sorted(&s, k - 1);
        let cur = inc.size();
        let u: Vec<usize> = g
            .nbrs(root)
            .iter()
            .copied()
            .filter(|&vj| {
                allow(vj)
                    && !e.contains(&vj)
                    && (!prune || g.deg(vj) + 1 >= cur)
                    && contains_all(g, vj, &r)
            })
            .collect();
        clique(g, &mut s, &u, inc, prune, &mut nodes);
    }
    nodes
}

fn clique(
    g: &Hypergraph,
    s: &mut Vec<usize>,
    u: &[usize],
    inc: &Incumbent,
    prune: bool,
    nodes: &mut u64,
) {
    *nodes += 1;
    if u.is_empty() {
        inc.offer(s);
        return;
    }
    let k = g.k();
    for (idx, &x) in u.iter().enumerate() {
        let rest = &u[idx + 1..];
        let target = if prune { inc.target() } else { 0 };
        if s.len() + u.len() - idx < target {
            return;
        }
        let fresh = extension_tuples(s, x, k);
        let u_rec: Vec<usize> = rest
            .iter()
            .copied()
            .filter(|&q| {
                g.is_neighbor(x, q)
                    && g.deg(q) + 1 >= target
                    && contains_all(g, q, &fresh)
            })
            .collect();
        s.push(x);
        clique(g, s, &u_rec, inc, prune, nodes);
        s.pop();
    }
}
