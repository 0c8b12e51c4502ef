//! Pairwise consistency of direct scalar observations of one state.

use crate::consistency::{GroupCheck, PairwiseScore, Verdict};

use super::measurement::ScalarMeasurement;

/// `(z_i − z_j)² / (σ_i² + σ_j²)`.
pub fn scalar_score(a: &ScalarMeasurement, b: &ScalarMeasurement) -> f64 {
    let d = a.value - b.value;
    d * d / (a.variance + b.variance)
}

pub struct ScalarPairs {
    pub measurements: Vec<ScalarMeasurement>,
    pub gamma: f64,
}

impl PairwiseScore for ScalarPairs {
    fn len(&self) -> usize {
        self.measurements.len()
    }
    fn score(&self, u: usize, v: usize) -> f64 {
        scalar_score(&self.measurements[u], &self.measurements[v])
    }
}

impl GroupCheck for ScalarPairs {
    fn order(&self) -> usize {
        2
    }
    fn check(&self, t: &[usize]) -> Verdict {
        Verdict::gate(self.score(t[0], t[1]), self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::pairwise_matrix;

    #[test]
    fn hand_computed_matrix() {
        let ms = [(1.0, 0.5), (2.0, 0.5), (4.0, 2.0)]
            .map(|(value, variance)| ScalarMeasurement { value, variance });
        let q = pairwise_matrix(&ScalarPairs {
            measurements: ms.to_vec(),
            gamma: 3.84,
        });
        assert_eq!(q.get(0, 1), 1.0);
        assert_eq!(q.get(0, 2), 9.0 / 2.5);
        assert_eq!(q.get(1, 2), 4.0 / 2.5);
        assert_eq!(q.get(2, 1), q.get(1, 2));
        let g = q.to_graph(3.84);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(q.to_graph(1.0).edge_count(), 1);
    }
}
