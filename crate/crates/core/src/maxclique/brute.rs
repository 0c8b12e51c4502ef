use std::time::Instant;

use super::{CliqueResult, MaxCliqueSolver, SearchStats, SolveError, SolverKind, SolverOptions};
use crate::combinations::for_each_combination;
use crate::hypergraph::Hypergraph;

/// Largest graph the exhaustive search accepts.
pub const BRUTE_FORCE_MAX_N: usize = 24;

/// Exhaustive subset enumeration, largest sizes first.
pub struct BruteForceSolver;

impl MaxCliqueSolver for BruteForceSolver {
    fn name(&self) -> &'static str {
        "bruteforce"
    }

    fn solve(&self, g: &Hypergraph, _opts: &SolverOptions) -> Result<CliqueResult, SolveError> {
        brute_force_max_clique(g)
    }
}

/// Tries every vertex subset from size `n` down to `k` in lexicographic
/// order; the first clique found is returned, so ties resolve to the
/// lexicographically smallest vertex list.
pub fn brute_force_max_clique(g: &Hypergraph) -> Result<CliqueResult, SolveError> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(SolveError::TooLarge {
            n,
            limit: BRUTE_FORCE_MAX_N,
        });
    }
    let start = Instant::now();
    let k = g.k();
    let mut tried = 0u64;
    let mut found = Vec::new();
    for size in (k..=n).rev() {
        let complete = for_each_combination(n, size, |c| {
            tried += 1;
            if g.is_clique(c) {
                found = c.to_vec();
                false
            } else {
                true
            }
        });
        if !complete {
            break;
        }
    }
    let stats = SearchStats {
        nodes_expanded: tried,
        wall_time: start.elapsed(),
    };
    Ok(CliqueResult::from_vertices(
        g,
        found,
        SolverKind::Bruteforce,
        stats,
    ))
}
