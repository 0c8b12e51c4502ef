use std::time::Instant;

use super::{CliqueResult, MaxCliqueSolver, SearchStats, SolveError, SolverKind, SolverOptions};
use crate::hypergraph::Hypergraph;

/// Maximum core of the pairwise embedding, reported as a clique candidate.
pub struct KCoreSolver;

impl MaxCliqueSolver for KCoreSolver {
    fn name(&self) -> &'static str {
        "kcore"
    }

    fn solve(&self, g: &Hypergraph, _opts: &SolverOptions) -> Result<CliqueResult, SolveError> {
        Ok(max_kcore_approx(g))
    }
}

/// Core number of every vertex of a 2-uniform graph (bucket peeling, linear
/// in vertices plus edges).
pub fn core_numbers(g: &Hypergraph) -> Vec<usize> {
    assert_eq!(g.k(), 2, "core numbers are defined on 2-uniform graphs");
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|v| g.deg(v)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut bin = vec![0usize; max_deg + 2];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let c = *b;
        *b = start;
        start += c;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..bin.len()).rev() {
        bin[d] = bin[d - 1];
    }
    if !bin.is_empty() {
        bin[0] = 0;
    }
    for i in 0..n {
        let v = vert[i];
        for &u in g.nbrs(v) {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    deg
}

/// Embeds `g` into a pairwise graph, keeps the vertices of its maximum core
/// and checks the result against `g` itself.
pub fn max_kcore_approx(g: &Hypergraph) -> CliqueResult {
    let start = Instant::now();
    let pairwise = g.embed_to_2uniform();
    let core = core_numbers(&pairwise);
    let top = core.iter().copied().max().unwrap_or(0);
    let vertices: Vec<usize> = if top == 0 {
        Vec::new()
    } else {
        (0..g.n()).filter(|&v| core[v] == top).collect()
    };
    let stats = SearchStats {
        nodes_expanded: g.n() as u64,
        wall_time: start.elapsed(),
    };
    CliqueResult::from_vertices(g, vertices, SolverKind::Kcore, stats)
}
