use super::{
    max_clique_exact, max_clique_heuristic, CliqueResult, Mode, SolveError, SolverOptions,
};
use crate::hypergraph::Hypergraph;

/// Up to `count` vertex-disjoint cliques, extracted greedily: solve, mask the
/// clique's vertices, solve again. The list is ordered by non-increasing size.
pub fn max_disjoint_cliques(
    g: &Hypergraph,
    count: usize,
    opts: &SolverOptions,
) -> Result<Vec<CliqueResult>, SolveError> {
    let mut masked = vec![false; g.n()];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let view = if out.is_empty() {
            g.clone()
        } else {
            g.without_vertices(&masked)
        };
        let mut r = match opts.mode {
            Mode::Exact => max_clique_exact(&view, opts)?,
            Mode::Heuristic => max_clique_heuristic(&view, opts)?,
        };
        if r.vertices.is_empty() {
            break;
        }
        for &v in &r.vertices {
            masked[v] = true;
        }
        r.is_valid_clique = g.is_clique(&r.vertices);
        out.push(r);
    }
    out.sort_by_key(|c| std::cmp::Reverse(c.size()));
    Ok(out)
}
