use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::combinations::{binomial, for_each_combination, for_each_subset};
use crate::hypergraph::Hypergraph;

use super::SimError;

/// Above this many possible edges, extra edges are drawn by rejection
/// instead of from an enumerated pool.
const ENUMERATION_LIMIT: u64 = 20_000_000;

#[derive(Debug, Clone)]
pub struct PlantedGraph {
    pub graph: Hypergraph,
    /// Sorted planted vertex set.
    pub planted: Vec<usize>,
    /// The requested density was below what the planted edges alone need.
    pub density_clamped: bool,
}

/// Random k-uniform graph with `round(density · C(n, k))` edges containing
/// every k-subset of a random planted set.
pub fn gen_planted_clique_graph(
    n: usize,
    k: usize,
    clique_size: usize,
    density: f64,
    seed: u64,
) -> Result<PlantedGraph, SimError> {
    if clique_size > n {
        return Err(SimError::InvalidSpec(format!("clique size {clique_size} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(SimError::InvalidSpec(format!("density {density} outside [0, 1]")));
    }
    let mut g = Hypergraph::new(n, k).map_err(|e| SimError::InvalidSpec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planted = index::sample(&mut rng, n, clique_size).into_vec();
    planted.sort_unstable();
    for_each_subset(&planted, k, |e| {
        g.add_edge(e).expect("valid tuple");
        true
    });
    let total = binomial(n as u64, k as u64);
    let target = (density * total as f64).round() as u64;
    let have = g.edge_count() as u64;
    let density_clamped = target < have;
    let extra = target.saturating_sub(have);
    if extra > 0 {
        if total <= ENUMERATION_LIMIT {
            let mut pool: Vec<Vec<usize>> = Vec::new();
            for_each_combination(n, k, |c| {
                if !g.has_edge(c).expect("valid tuple") {
                    pool.push(c.to_vec());
                }
                true
            });
            let (chosen, _) = pool.partial_shuffle(&mut rng, extra as usize);
            for e in chosen.iter() {
                g.add_edge(e).expect("valid tuple");
            }
        } else {
            let mut added = 0;
            while added < extra {
                let e = index::sample(&mut rng, n, k).into_vec();
                if g.add_edge(&e).expect("valid tuple") {
                    added += 1;
                }
            }
        }
    }
    Ok(PlantedGraph {
        graph: g,
        planted,
        density_clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_keeps_only_the_planted_edges() {
        let p = gen_planted_clique_graph(30, 3, 6, 0.0, 4).unwrap();
        assert_eq!(p.graph.edge_count(), 20);
        assert!(p.graph.is_clique(&p.planted));
        assert!(p.density_clamped);
    }

    #[test]
    fn density_sets_edge_count() {
        let p = gen_planted_clique_graph(100, 3, 10, 0.1, 9).unwrap();
        assert_eq!(p.graph.edge_count(), 16_170);
        assert_eq!(p.planted.len(), 10);
        assert!(p.graph.is_clique(&p.planted));
        assert!(!p.density_clamped);
        let q = gen_planted_clique_graph(100, 3, 10, 0.1, 9).unwrap();
        assert_eq!(q.planted, p.planted);
        assert!(gen_planted_clique_graph(5, 3, 6, 0.1, 0).is_err());
    }
}
