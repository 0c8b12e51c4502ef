//! Consistency-graph construction.
//!
//! A [`CheckFamily`] supplies one check per order `j ∈ 2..=k`; the order-k
//! check decides edges, lower orders only prune candidates when building
//! hierarchically. Vertices are measurement indices.

mod builder;
mod pairwise;

use std::fmt;

use thiserror::Error;

use crate::combinations::binomial;

pub use builder::{build_graph_batch, BuildOptions, BuildStats, ConsistencyGraphBuilder};
pub use pairwise::{pairwise_matrix, ConsistencyMatrix, PairwiseScore};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("family order {got} does not match graph order {expected}")]
    FamilyMismatch { expected: usize, got: usize },
    #[error("family has no order-{0} check")]
    MissingTopCheck(usize),
    #[error("check registered for order {order} but family order is {k}")]
    BadOrder { order: usize, k: usize },
    #[error("family covers {available} measurements, cannot add measurement {index}")]
    OutOfMeasurements { index: usize, available: usize },
    #[error("num_threads must be at least 1")]
    NoThreads,
}

/// Outcome of one check: pass flag plus the score that was gated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub score: f64,
}

impl Verdict {
    pub fn gate(score: f64, threshold: f64) -> Self {
        Self {
            pass: score <= threshold,
            score,
        }
    }

    pub fn fail() -> Self {
        Self {
            pass: false,
            score: f64::INFINITY,
        }
    }
}

/// Consistency predicate over sorted tuples of measurement indices.
pub trait GroupCheck: Send + Sync {
    fn order(&self) -> usize;
    fn check(&self, tuple: &[usize]) -> Verdict;
}

/// Adapter turning a closure into a [`GroupCheck`].
pub struct FnCheck<F> {
    order: usize,
    f: F,
}

impl<F: Fn(&[usize]) -> Verdict + Send + Sync> FnCheck<F> {
    pub fn new(order: usize, f: F) -> Self {
        Self { order, f }
    }
}

impl<F: Fn(&[usize]) -> Verdict + Send + Sync> GroupCheck for FnCheck<F> {
    fn order(&self) -> usize {
        self.order
    }
    fn check(&self, tuple: &[usize]) -> Verdict {
        (self.f)(tuple)
    }
}

/// Checks for orders `2..=k` over a fixed list of `m` measurements.
pub struct CheckFamily<'a> {
    k: usize,
    m: usize,
    checks: Vec<Option<Box<dyn GroupCheck + 'a>>>,
    thresholds: Vec<Option<f64>>,
}

impl<'a> CheckFamily<'a> {
    /// A family whose order-k check is `top`.
    pub fn new(m: usize, top: Box<dyn GroupCheck + 'a>, threshold: Option<f64>) -> Self {
        let k = top.order();
        let mut checks: Vec<Option<Box<dyn GroupCheck + 'a>>> = (0..=k).map(|_| None).collect();
        let mut thresholds = vec![None; k + 1];
        checks[k] = Some(top);
        thresholds[k] = threshold;
        Self {
            k,
            m,
            checks,
            thresholds,
        }
    }

    /// Adds a lower-order prefilter.
    pub fn with_lower(
        mut self,
        check: Box<dyn GroupCheck + 'a>,
        threshold: Option<f64>,
    ) -> Result<Self, BuildError> {
        let j = check.order();
        if j < 2 || j >= self.k {
            return Err(BuildError::BadOrder {
                order: j,
                k: self.k,
            });
        }
        self.checks[j] = Some(check);
        self.thresholds[j] = threshold;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of measurements the checks can index.
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn check(&self, j: usize) -> Option<&(dyn GroupCheck + 'a)> {
        self.checks.get(j).and_then(|c| c.as_deref())
    }

    pub fn threshold(&self, j: usize) -> Option<f64> {
        self.thresholds.get(j).copied().flatten()
    }

    /// Orders with a registered check, ascending; always ends with `k`.
    pub fn orders(&self) -> Vec<usize> {
        (2..=self.k).filter(|&j| self.checks[j].is_some()).collect()
    }
}

impl fmt::Debug for CheckFamily<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CheckFamily")
            .field("k", &self.k)
            .field("m", &self.m)
            .field("orders", &self.orders())
            .field("thresholds", &self.thresholds)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    Batch,
    Incremental,
}

/// Order-k checks needed to build a graph over `m` measurements in batch,
/// or to add the `m`-th measurement incrementally.
pub fn check_count_estimate(m: usize, k: usize, mode: CountMode) -> u64 {
    match mode {
        CountMode::Batch => binomial(m as u64, k as u64),
        CountMode::Incremental if m == 0 || k == 0 => 0,
        CountMode::Incremental => binomial(m as u64 - 1, k as u64 - 1),
    }
}
