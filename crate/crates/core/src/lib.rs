//! Group-k consistency maximization: consistency hypergraphs built from
//! noisy measurements, maximum-clique solvers over k-uniform hypergraphs,
//! the range, pose-loop and scaleless visual metrics, and synthetic worlds
//! for evaluating them.

pub mod combinations;
pub mod consistency;
pub mod hypergraph;
pub mod maxclique;
pub mod metrics;
pub mod sim;

pub use hypergraph::{GraphError, Hypergraph, Tuple};
