//! k-uniform hypergraphs ("generalized graphs").
//!
//! Vertices are dense indices `0..n`. Every edge is stored in canonical
//! (strictly increasing) form. For each vertex `v` we keep its edge set
//! `E(v)`: the `(k-1)`-tuples obtained by removing `v` from every edge that
//! contains it, sorted lexicographically so membership tests are a binary
//! search. The neighborhood `N(v)` is the sorted union of the vertices that
//! appear in `E(v)`, and the degree is `|N(v)|`.
//!
//! Graphs are append-only: vertices and edges can be added but never removed.
//! Callers that need to exclude vertices build a masked copy with
//! [`Hypergraph::without_vertices`].

use smallvec::SmallVec;
use thiserror::Error;

use crate::combinations::for_each_combination;

/// A canonical (sorted, duplicate-free) vertex tuple.
pub type Tuple = SmallVec<[usize; 4]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge arity must be at least 2, got {0}")]
    ArityTooSmall(usize),
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge lists vertex {0} more than once")]
    DuplicateVertex(usize),
    #[error("edge has {got} vertices, graph arity is {expected}")]
    WrongArity { expected: usize, got: usize },
}

#[derive(Debug, Clone)]
pub struct Hypergraph {
    k: usize,
    edge_count: usize,
    edge_sets: Vec<Vec<Tuple>>,
    neighborhoods: Vec<Vec<usize>>,
}

impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.n() == other.n() && self.edge_sets == other.edge_sets
    }
}

impl Eq for Hypergraph {}

impl Hypergraph {
    pub fn new(n: usize, k: usize) -> Result<Self, GraphError> {
        if k < 2 {
            return Err(GraphError::ArityTooSmall(k));
        }
        Ok(Self {
            k,
            edge_count: 0,
            edge_sets: vec![Vec::new(); n],
            neighborhoods: vec![Vec::new(); n],
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.edge_sets.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn add_vertex(&mut self) -> usize {
        self.edge_sets.push(Vec::new());
        self.neighborhoods.push(Vec::new());
        self.edge_sets.len() - 1
    }

    fn canonical(&self, vs: &[usize]) -> Result<Tuple, GraphError> {
        if vs.len() != self.k {
            return Err(GraphError::WrongArity {
                expected: self.k,
                got: vs.len(),
            });
        }
        let n = self.n();
        let mut t: Tuple = vs.iter().copied().collect();
        t.sort_unstable();
        for w in t.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateVertex(w[0]));
            }
        }
        if let Some(&v) = t.last() {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n });
            }
        }
        Ok(t)
    }

    fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if v >= self.n() {
            Err(GraphError::VertexOutOfRange {
                vertex: v,
                n: self.n(),
            })
        } else {
            Ok(())
        }
    }

    /// Inserts an edge. Returns `Ok(false)` if the edge was already present.
    pub fn add_edge(&mut self, vs: &[usize]) -> Result<bool, GraphError> {
        let t = self.canonical(vs)?;
        Ok(self.insert_canonical(&t))
    }

    /// Inserts an edge that is already sorted, distinct and in range.
    pub(crate) fn insert_canonical(&mut self, t: &[usize]) -> bool {
        debug_assert_eq!(t.len(), self.k);
        let first = t[0];
        let rest: Tuple = t[1..].iter().copied().collect();
        let pos = match self.edge_sets[first].binary_search(&rest) {
            Ok(_) => return false,
            Err(pos) => pos,
        };
        self.edge_sets[first].insert(pos, rest);
        for (idx, &v) in t.iter().enumerate().skip(1) {
            let others: Tuple = t
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != idx)
                .map(|(_, &w)| w)
                .collect();
            let set = &mut self.edge_sets[v];
            if let Err(pos) = set.binary_search(&others) {
                set.insert(pos, others);
            }
        }
        for (idx, &v) in t.iter().enumerate() {
            let nbrs = &mut self.neighborhoods[v];
            for (j, &w) in t.iter().enumerate() {
                if j != idx {
                    if let Err(pos) = nbrs.binary_search(&w) {
                        nbrs.insert(pos, w);
                    }
                }
            }
        }
        self.edge_count += 1;
        true
    }

    /// Order-insensitive edge membership.
    pub fn has_edge(&self, vs: &[usize]) -> Result<bool, GraphError> {
        let t = self.canonical(vs)?;
        Ok(self.contains_canonical(&t))
    }

    pub(crate) fn contains_canonical(&self, t: &[usize]) -> bool {
        self.edge_sets[t[0]]
            .binary_search_by(|e| e.as_slice().cmp(&t[1..]))
            .is_ok()
    }

    pub fn edge_set(&self, v: usize) -> Result<&[Tuple], GraphError> {
        self.check_vertex(v)?;
        Ok(&self.edge_sets[v])
    }

    pub fn neighborhood(&self, v: usize) -> Result<&[usize], GraphError> {
        self.check_vertex(v)?;
        Ok(&self.neighborhoods[v])
    }

    pub fn degree(&self, v: usize) -> Result<usize, GraphError> {
        self.check_vertex(v)?;
        Ok(self.neighborhoods[v].len())
    }

    #[inline]
    pub(crate) fn edges_of(&self, v: usize) -> &[Tuple] {
        &self.edge_sets[v]
    }

    #[inline]
    pub(crate) fn nbrs(&self, v: usize) -> &[usize] {
        &self.neighborhoods[v]
    }

    #[inline]
    pub(crate) fn deg(&self, v: usize) -> usize {
        self.neighborhoods[v].len()
    }

    /// `true` iff the sorted `(k-1)`-tuple `t` is a member of `E(v)`.
    #[inline]
    pub(crate) fn edge_set_contains(&self, v: usize, t: &[usize]) -> bool {
        self.edge_sets[v]
            .binary_search_by(|e| e.as_slice().cmp(t))
            .is_ok()
    }

    #[inline]
    pub(crate) fn is_neighbor(&self, v: usize, w: usize) -> bool {
        self.neighborhoods[v].binary_search(&w).is_ok()
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Tuple> + '_ {
        self.edge_sets.iter().enumerate().flat_map(|(v, set)| {
            let start = set.partition_point(|e| e[0] < v);
            set[start..].iter().map(move |e| {
                let mut t = Tuple::with_capacity(e.len() + 1);
                t.push(v);
                t.extend_from_slice(e);
                t
            })
        })
    }

    /// Definition check: every k-subset of `vs` is an edge. Sets smaller than
    /// `k` are not cliques.
    pub fn is_clique(&self, vs: &[usize]) -> bool {
        if vs.len() < self.k {
            return false;
        }
        let mut sorted = vs.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != vs.len() || *sorted.last().unwrap() >= self.n() {
            return false;
        }
        let mut ok = true;
        let mut buf = Vec::with_capacity(self.k);
        for_each_combination(sorted.len(), self.k, |idx| {
            buf.clear();
            buf.extend(idx.iter().map(|&i| sorted[i]));
            if !self.contains_canonical(&buf) {
                ok = false;
                return false;
            }
            true
        });
        ok
    }

    /// Replaces every k-edge with its `C(k, 2)` vertex pairs.
    pub fn embed_to_2uniform(&self) -> Hypergraph {
        let mut out = Hypergraph::new(self.n(), 2).expect("arity 2 is valid");
        if self.k == 2 {
            return self.clone();
        }
        for (v, nbrs) in self.neighborhoods.iter().enumerate() {
            for &w in nbrs.iter().filter(|&&w| w > v) {
                out.insert_canonical(&[v, w]);
            }
        }
        out
    }

    /// Copy of the graph keeping every vertex but dropping all edges that
    /// touch a masked vertex.
    pub fn without_vertices(&self, masked: &[bool]) -> Hypergraph {
        let mut out = Hypergraph::new(self.n(), self.k).expect("arity already validated");
        for e in self.edges() {
            if e.iter().all(|&v| !masked.get(v).copied().unwrap_or(false)) {
                out.insert_canonical(&e);
            }
        }
        out
    }

    /// Copy restricted to the first `n` vertices.
    pub fn truncated(&self, n: usize) -> Hypergraph {
        let n = n.min(self.n());
        let mut out = Hypergraph::new(n, self.k).expect("arity already validated");
        for e in self.edges() {
            if *e.last().unwrap() < n {
                out.insert_canonical(&e);
            }
        }
        out
    }
}
