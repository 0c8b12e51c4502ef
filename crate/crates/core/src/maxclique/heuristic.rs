use std::time::Instant;

use super::{
    contains_all, extension_tuples, for_each_root, subsets_sorted, CliqueResult, Incumbent,
    MaxCliqueSolver, SearchStats, SolveError, SolverKind, SolverOptions,
};
use crate::hypergraph::Hypergraph;

/// Greedy single-path search per root vertex, driven by connectivity inside
/// the root's edge set.
pub struct HeuristicSolver;

impl MaxCliqueSolver for HeuristicSolver {
    fn name(&self) -> &'static str {
        "heuristic"
    }

    fn solve(&self, g: &Hypergraph, opts: &SolverOptions) -> Result<CliqueResult, SolveError> {
        max_clique_heuristic(g, opts)
    }
}

pub fn max_clique_heuristic(
    g: &Hypergraph,
    opts: &SolverOptions,
) -> Result<CliqueResult, SolveError> {
    if opts.num_threads == 0 {
        return Err(SolveError::NoThreads);
    }
    let start = Instant::now();
    let inc = Incumbent::new(Vec::new(), opts.deterministic);
    let roots: Vec<usize> = (0..g.n()).collect();
    for_each_root(&roots, opts.num_threads, |i| {
        let nodes = greedy_root(g, i, |_| true, &inc, opts.deterministic);
        inc.add_nodes(nodes);
    });
    let (best, nodes) = inc.into_parts();
    let stats = SearchStats {
        nodes_expanded: if opts.track_stats { nodes } else { 0 },
        wall_time: start.elapsed(),
    };
    Ok(CliqueResult::from_vertices(
        g,
        best,
        SolverKind::Heuristic,
        stats,
    ))
}

/// Number of tuples in `E(root)` that contain each vertex.
fn connectivity(g: &Hypergraph, root: usize, allow: &impl Fn(usize) -> bool) -> Vec<u32> {
    let mut conn = vec![0u32; g.n()];
    for e in g.edges_of(root) {
        if e.iter().all(|&w| allow(w)) {
            for &w in e {
                conn[w] += 1;
            }
        }
    }
    conn
}

/// One greedy descent from `root`. With `isolated` set, the incumbent is
/// only consulted for the root-level degree skip, which makes the per-root
/// outcome independent of scheduling.
pub(crate) fn greedy_root<A>(
    g: &Hypergraph,
    root: usize,
    allow: A,
    inc: &Incumbent,
    isolated: bool,
) -> u64
where
    A: Fn(usize) -> bool,
{
    let k = g.k();
    if g.deg(root) + 1 < inc.size() {
        return 0;
    }
    let conn = connectivity(g, root, &allow);
    let seed = g
        .edges_of(root)
        .iter()
        .filter(|e| e.iter().all(|&w| allow(w)))
        .map(|e| (e.iter().map(|&w| conn[w] as u64).sum::<u64>(), e))
        // max score, first (lexicographically smallest) tuple on ties
        .fold(None, |best: Option<(u64, &crate::Tuple)>, (sc, e)| match best {
            Some((bs, _)) if bs >= sc => best,
            _ => Some((sc, e)),
        });
    let Some((_, e)) = seed else {
        return 0;
    };
    let mut s: Vec<usize> = e.to_vec();
    s.push(root);
    let r = subsets_sorted(&s, k - 1);
    let cur = if isolated { 0 } else { inc.size() };
    let mut u: Vec<usize> = g
        .nbrs(root)
        .iter()
        .copied()
        .filter(|&vj| {
            allow(vj) && !e.contains(&vj) && g.deg(vj) + 1 >= cur && contains_all(g, vj, &r)
        })
        .collect();
    if !isolated && s.len() + u.len() <= inc.size() {
        return 0;
    }
    let mut nodes = 0u64;
    loop {
        nodes += 1;
        if u.is_empty() {
            inc.offer(&s);
            return nodes;
        }
        // max connectivity, smallest index on ties (u is ascending)
        let (pos, &x) = u
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, &usize)>, (p, v)| match best {
                Some((_, b)) if conn[*b] >= conn[*v] => best,
                _ => Some((p, v)),
            })
            .expect("u is non-empty");
        u.remove(pos);
        let fresh = extension_tuples(&s, x, k);
        let min_deg = if isolated { 0 } else { inc.size() };
        u.retain(|&q| g.is_neighbor(x, q) && g.deg(q) >= min_deg && contains_all(g, q, &fresh));
        s.push(x);
    }
}
