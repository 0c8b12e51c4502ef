use crate::hypergraph::Hypergraph;

/// Directed pairwise consistency score `q_uv` (not necessarily symmetric).
pub trait PairwiseScore: Send + Sync {
    fn len(&self) -> usize;
    fn score(&self, u: usize, v: usize) -> f64;
}

/// Dense matrix of pairwise scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyMatrix {
    m: usize,
    q: Vec<f64>,
}

impl ConsistencyMatrix {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.q[u * self.m + v]
    }

    /// 2-uniform graph with an edge wherever both directions pass `gamma`.
    pub fn to_graph(&self, gamma: f64) -> Hypergraph {
        let mut g = Hypergraph::new(self.m, 2).expect("k = 2 is valid");
        for u in 0..self.m {
            for v in u + 1..self.m {
                if self.get(u, v) <= gamma && self.get(v, u) <= gamma {
                    g.insert_canonical(&[u, v]);
                }
            }
        }
        g
    }
}

pub fn pairwise_matrix(metric: &dyn PairwiseScore) -> ConsistencyMatrix {
    let m = metric.len();
    let mut q = vec![0.0; m * m];
    for u in 0..m {
        for v in 0..m {
            if u != v {
                q[u * m + v] = metric.score(u, v).max(0.0);
            }
        }
    }
    ConsistencyMatrix { m, q }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Table(Vec<Vec<f64>>);
    impl PairwiseScore for Table {
        fn len(&self) -> usize {
            self.0.len()
        }
        fn score(&self, u: usize, v: usize) -> f64 {
            self.0[u][v]
        }
    }

    #[test]
    fn symmetrization_needs_both_directions() {
        let t = Table(vec![
            vec![9.0, 1.0, 5.0],
            vec![1.0, 9.0, 1.0],
            vec![1.0, 2.0, 9.0],
        ]);
        let q = pairwise_matrix(&t);
        assert_eq!(q.get(0, 0), 0.0);
        let g = q.to_graph(2.0);
        assert!(g.has_edge(&[0, 1]).unwrap());
        assert!(!g.has_edge(&[0, 2]).unwrap());
        assert!(g.has_edge(&[1, 2]).unwrap());
    }
}
