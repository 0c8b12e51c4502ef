use std::time::{Duration, Instant};

use rayon::prelude::*;
use rustc_hash::FxHashSet;

use super::{BuildError, CheckFamily, CountMode};
use crate::combinations::{for_each_combination, for_each_subset};
use crate::hypergraph::{Hypergraph, Tuple};

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Test order-j candidates only if all their lower-order subsets passed.
    pub hierarchical: bool,
    pub num_threads: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            hierarchical: false,
            num_threads: 1,
        }
    }
}

impl BuildOptions {
    pub fn hierarchical(mut self, on: bool) -> Self {
        self.hierarchical = on;
        self
    }

    pub fn with_threads(mut self, n: usize) -> Self {
        self.num_threads = n;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildStats {
    /// `checks[j]` counts order-j check invocations.
    pub checks: Vec<u64>,
    /// Order-k checks a direct build would need.
    pub budget: u64,
    pub wall_time: Duration,
    /// Fewer measurements than the family order: the graph has no edges.
    pub insufficient_measurements: bool,
}

impl BuildStats {
    pub fn checks_at(&self, order: usize) -> u64 {
        self.checks.get(order).copied().unwrap_or(0)
    }

    pub fn total_checks(&self) -> u64 {
        self.checks.iter().sum()
    }
}

/// Grows a consistency graph batch-wise or one measurement at a time.
pub struct ConsistencyGraphBuilder {
    graph: Hypergraph,
    opts: BuildOptions,
    /// Passing tuples per lower order, kept for hierarchical filtering.
    passing: Vec<FxHashSet<Tuple>>,
    stats: BuildStats,
    pool: Option<rayon::ThreadPool>,
}

impl ConsistencyGraphBuilder {
    pub fn new(k: usize, opts: BuildOptions) -> Result<Self, BuildError> {
        if opts.num_threads == 0 {
            return Err(BuildError::NoThreads);
        }
        let graph = Hypergraph::new(0, k.max(2)).map_err(|_| BuildError::FamilyMismatch {
            expected: 2,
            got: k,
        })?;
        let pool = if opts.num_threads > 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.num_threads)
                .build()
                .ok()
        } else {
            None
        };
        Ok(Self {
            graph,
            opts,
            passing: (0..=k).map(|_| FxHashSet::default()).collect(),
            stats: BuildStats {
                checks: vec![0; k + 1],
                insufficient_measurements: true,
                ..BuildStats::default()
            },
            pool,
        })
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn into_graph(self) -> Hypergraph {
        self.graph
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    fn validate(&self, family: &CheckFamily) -> Result<(), BuildError> {
        if family.k() != self.graph.k() {
            return Err(BuildError::FamilyMismatch {
                expected: self.graph.k(),
                got: family.k(),
            });
        }
        if family.check(family.k()).is_none() {
            return Err(BuildError::MissingTopCheck(family.k()));
        }
        Ok(())
    }

    fn orders(&self, family: &CheckFamily) -> Vec<usize> {
        if self.opts.hierarchical {
            family.orders()
        } else {
            vec![family.k()]
        }
    }

    /// Adds every measurement of `family` not yet in the graph in one pass.
    pub fn build_batch(&mut self, family: &CheckFamily) -> Result<(), BuildError> {
        self.validate(family)?;
        let start = Instant::now();
        let base = self.graph.n();
        if base > 0 {
            // extend one at a time so only new combinations are checked
            for _ in base..family.len() {
                self.push(family)?;
            }
            return Ok(());
        }
        let m = family.len();
        for _ in 0..m {
            self.graph.add_vertex();
        }
        let k = family.k();
        let orders = self.orders(family);
        let mut prev: Option<usize> = None;
        for &j in &orders {
            let check = family.check(j).expect("order listed by family");
            let (found, count) = match prev {
                None => {
                    let firsts: Vec<usize> = (0..m).collect();
                    self.par_collect(&firsts, |&v0, out, count| {
                        for_each_combination(m - v0 - 1, j - 1, |rest| {
                            let mut t = Tuple::with_capacity(j);
                            t.push(v0);
                            t.extend(rest.iter().map(|&x| x + v0 + 1));
                            *count += 1;
                            if check.check(&t).pass {
                                out.push(t);
                            }
                            true
                        });
                    })
                }
                Some(p) => {
                    let mut seeds: Vec<&Tuple> = self.passing[p].iter().collect();
                    seeds.sort_unstable();
                    let lower = &self.passing[p];
                    self.par_collect(&seeds, |t, out, count| {
                        let last = *t.last().unwrap();
                        for_each_combination(m - last - 1, j - p, |ext| {
                            let mut cand: Tuple = (*t).clone();
                            cand.extend(ext.iter().map(|&x| x + last + 1));
                            if all_subsets_in(&cand, p, lower) {
                                *count += 1;
                                if check.check(&cand).pass {
                                    out.push(cand);
                                }
                            }
                            true
                        });
                    })
                }
            };
            self.stats.checks[j] += count;
            self.store(j, k, found);
            prev = Some(j);
        }
        self.finish_stats(start);
        Ok(())
    }

    /// Adds the next measurement (index `graph.n()`) and returns its vertex.
    /// Only combinations containing it are checked.
    pub fn push(&mut self, family: &CheckFamily) -> Result<usize, BuildError> {
        self.validate(family)?;
        let v = self.graph.n();
        if v >= family.len() {
            return Err(BuildError::OutOfMeasurements {
                index: v,
                available: family.len(),
            });
        }
        let start = Instant::now();
        self.graph.add_vertex();
        let k = family.k();
        let orders = self.orders(family);
        let mut prev: Option<(usize, Vec<Tuple>)> = None;
        for &j in &orders {
            let check = family.check(j).expect("order listed by family");
            let (found, count) = match &prev {
                None => {
                    let mut out = Vec::new();
                    let mut count = 0;
                    for_each_combination(v, j - 1, |rest| {
                        let mut t: Tuple = rest.iter().copied().collect();
                        t.push(v);
                        count += 1;
                        if check.check(&t).pass {
                            out.push(t);
                        }
                        true
                    });
                    (out, count)
                }
                Some((p, fresh)) => {
                    let p = *p;
                    let lower = &self.passing[p];
                    self.par_collect(fresh, |t, out, count| {
                        // t = o ∪ {v}; insert j-p vertices between max(o) and v
                        let o = &t[..p - 1];
                        let lo = o.last().map_or(0, |&x| x + 1);
                        for_each_combination(v - lo, j - p, |ext| {
                            let mut cand: Tuple = o.iter().copied().collect();
                            cand.extend(ext.iter().map(|&x| x + lo));
                            cand.push(v);
                            if all_subsets_in(&cand, p, lower) {
                                *count += 1;
                                if check.check(&cand).pass {
                                    out.push(cand);
                                }
                            }
                            true
                        });
                    })
                }
            };
            self.stats.checks[j] += count;
            let fresh = if j < k { found.clone() } else { Vec::new() };
            self.store(j, k, found);
            prev = Some((j, fresh));
        }
        self.finish_stats(start);
        Ok(v)
    }

    fn store(&mut self, j: usize, k: usize, found: Vec<Tuple>) {
        if j == k {
            for t in found {
                self.graph.insert_canonical(&t);
            }
        } else {
            self.passing[j].extend(found);
        }
    }

    fn finish_stats(&mut self, start: Instant) {
        let n = self.graph.n();
        let k = self.graph.k();
        self.stats.budget = super::check_count_estimate(n, k, CountMode::Batch);
        self.stats.wall_time += start.elapsed();
        self.stats.insufficient_measurements = n < k;
    }

    /// Runs `f` over `items` (in parallel when a pool is configured) and
    /// concatenates the outputs in item order.
    fn par_collect<T, F>(&self, items: &[T], f: F) -> (Vec<Tuple>, u64)
    where
        T: Sync,
        F: Fn(&T, &mut Vec<Tuple>, &mut u64) + Send + Sync,
    {
        let run = |it: &T| {
            let mut out = Vec::new();
            let mut count = 0u64;
            f(it, &mut out, &mut count);
            (out, count)
        };
        let parts: Vec<(Vec<Tuple>, u64)> = match &self.pool {
            Some(pool) if items.len() > 1 => pool.install(|| items.par_iter().map(run).collect()),
            _ => items.iter().map(run).collect(),
        };
        let mut all = Vec::new();
        let mut total = 0;
        for (out, c) in parts {
            all.extend(out);
            total += c;
        }
        (all, total)
    }
}

fn all_subsets_in(cand: &[usize], p: usize, set: &FxHashSet<Tuple>) -> bool {
    let mut key = Tuple::with_capacity(p);
    for_each_subset(cand, p, |s| {
        key.clear();
        key.extend_from_slice(s);
        set.contains(&key)
    })
}

/// Builds the consistency graph over all measurements of `family`.
pub fn build_graph_batch(
    family: &CheckFamily,
    opts: &BuildOptions,
) -> Result<(Hypergraph, BuildStats), BuildError> {
    let mut b = ConsistencyGraphBuilder::new(family.k(), opts.clone())?;
    b.build_batch(family)?;
    let stats = b.stats.clone();
    Ok((b.into_graph(), stats))
}
