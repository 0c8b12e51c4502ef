use std::time::Instant;

use super::exact::search_root;
use super::heuristic::greedy_root;
use super::{CliqueResult, Incumbent, Mode, SearchStats, SolveError, SolverKind, SolverOptions};
use crate::hypergraph::Hypergraph;

/// Updates `prev` after `new_vertex` and its edges were added: only cliques
/// containing `new_vertex` (and otherwise vertices below it) are searched.
/// The previous clique is kept on ties.
pub fn max_clique_incremental(
    g: &Hypergraph,
    prev: &CliqueResult,
    new_vertex: usize,
    opts: &SolverOptions,
) -> Result<CliqueResult, SolveError> {
    if new_vertex >= g.n() {
        return Err(SolveError::VertexOutOfRange {
            vertex: new_vertex,
            n: g.n(),
        });
    }
    let prev_ok = prev.vertices.iter().all(|&v| v < new_vertex)
        && (prev.vertices.is_empty() || g.is_clique(&prev.vertices));
    if !prev_ok {
        return Err(SolveError::InvalidPrevious(new_vertex));
    }
    let start = Instant::now();
    let inc = Incumbent::new(prev.vertices.clone(), false);
    let below = |w: usize| w < new_vertex;
    let nodes = match opts.mode {
        Mode::Exact => search_root(g, new_vertex, below, &inc, opts.prune),
        Mode::Heuristic => greedy_root(g, new_vertex, below, &inc, false),
    };
    let (best, _) = inc.into_parts();
    let stats = SearchStats {
        nodes_expanded: if opts.track_stats { nodes } else { 0 },
        wall_time: start.elapsed(),
    };
    Ok(CliqueResult::from_vertices(
        g,
        best,
        SolverKind::Incremental,
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxclique::{max_clique_exact, CliqueResult};

    #[test]
    fn isolated_new_vertex_keeps_prev() {
        let mut g = Hypergraph::new(4, 3).unwrap();
        g.add_edge(&[0, 1, 2]).unwrap();
        let opts = SolverOptions::default();
        let prev = max_clique_exact(&g.truncated(3), &opts).unwrap();
        let r = max_clique_incremental(&g, &prev, 3, &opts).unwrap();
        assert_eq!(r.vertices, prev.vertices);
        assert_eq!(r.solver, SolverKind::Incremental);
    }

    #[test]
    fn growing_complete_graph() {
        let k = 3;
        let mut g = Hypergraph::new(0, k).unwrap();
        let mut prev = CliqueResult::empty(SolverKind::Incremental);
        for mode in [Mode::Exact, Mode::Heuristic] {
            let opts = SolverOptions::default().with_mode(mode);
            g = Hypergraph::new(0, k).unwrap();
            prev = CliqueResult::empty(SolverKind::Incremental);
            for step in 0..8 {
                let v = g.add_vertex();
                crate::combinations::for_each_combination(v, k - 1, |c| {
                    let mut e = c.to_vec();
                    e.push(v);
                    g.add_edge(&e).unwrap();
                    true
                });
                prev = max_clique_incremental(&g, &prev, v, &opts).unwrap();
                let expect = if step + 1 >= k { step + 1 } else { 0 };
                assert_eq!(prev.size(), expect);
            }
        }
        assert_eq!(prev.size(), 8);
        assert_eq!(g.n(), 8);
    }

    #[test]
    fn invalid_prev_rejected() {
        let mut g = Hypergraph::new(5, 3).unwrap();
        g.add_edge(&[0, 1, 2]).unwrap();
        let bogus = CliqueResult {
            vertices: vec![0, 1, 3],
            ..CliqueResult::empty(SolverKind::Exact)
        };
        let opts = SolverOptions::default();
        assert_eq!(
            max_clique_incremental(&g, &bogus, 4, &opts),
            Err(SolveError::InvalidPrevious(4))
        );
        let above = CliqueResult {
            vertices: vec![0, 1, 2],
            ..CliqueResult::empty(SolverKind::Exact)
        };
        assert!(max_clique_incremental(&g, &above, 2, &opts).is_err());
    }
}
