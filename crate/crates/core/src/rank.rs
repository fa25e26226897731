//! Tuple scoring over the pattern-tuple graph.
//!
//! [`npatterns`] and [`npages`] count supporting patterns and supporting
//! documents. [`PtHits`] lets patterns and tuples reinforce each other: a
//! tuple's weight is the sum of the weights of the patterns extracting it,
//! a pattern's weight is the sum of the weights of its tuples, both vectors
//! L1-normalized after every round. [`mutual_information`] scores a single
//! candidate from document frequencies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge ({pattern}, {tuple}) points outside a {m}x{n} graph")]
    EndpointOutOfRange {
        pattern: usize,
        tuple: usize,
        m: usize,
        n: usize,
    },
    #[error("duplicate edge ({pattern}, {tuple})")]
    ParallelEdge { pattern: usize, tuple: usize },
    #[error("edge ({pattern}, {tuple}) has weight 0")]
    ZeroWeight { pattern: usize, tuple: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("mutual information undefined: zero marginal count")]
    Undefined,
    #[error("inconsistent counts: {0}")]
    InvalidCounts(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub pattern: usize,
    pub tuple: usize,
    /// Number of distinct documents supporting the edge.
    pub weight: u32,
}

/// Bipartite graph between `m` patterns and `n` tuples. Edges are kept
/// sorted by (pattern, tuple).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    m: usize,
    n: usize,
    edges: Vec<Edge>,
    by_pattern: Vec<Vec<usize>>,
    by_tuple: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(
        m: usize,
        n: usize,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self, GraphError> {
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        for e in &edges {
            if e.pattern >= m || e.tuple >= n {
                return Err(GraphError::EndpointOutOfRange {
                    pattern: e.pattern,
                    tuple: e.tuple,
                    m,
                    n,
                });
            }
            if e.weight == 0 {
                return Err(GraphError::ZeroWeight {
                    pattern: e.pattern,
                    tuple: e.tuple,
                });
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].pattern, w[0].tuple) == (w[1].pattern, w[1].tuple))
        {
            return Err(GraphError::ParallelEdge {
                pattern: w[0].pattern,
                tuple: w[0].tuple,
            });
        }
        let mut by_pattern = vec![Vec::new(); m];
        let mut by_tuple = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            by_pattern[e.pattern].push(i);
            by_tuple[e.tuple].push(i);
        }
        Ok(BipartiteGraph {
            m,
            n,
            edges,
            by_pattern,
            by_tuple,
        })
    }

    /// Unweighted graph from `(pattern, tuple)` pairs.
    pub fn from_pairs(m: usize, n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::new(
            m,
            n,
            pairs.iter().map(|&(pattern, tuple)| Edge {
                pattern,
                tuple,
                weight: 1,
            }),
        )
    }

    pub fn pattern_count(&self) -> usize {
        self.m
    }

    pub fn tuple_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_weight(&self) -> u32 {
        self.edges.iter().map(|e| e.weight).max().unwrap_or(0)
    }

    pub fn edge_index(&self, pattern: usize, tuple: usize) -> Option<usize> {
        self.edges
            .binary_search_by(|e| (e.pattern, e.tuple).cmp(&(pattern, tuple)))
            .ok()
    }

    /// Edges into `tuple`, in pattern order.
    pub fn tuple_edges(&self, tuple: usize) -> impl Iterator<Item = &Edge> {
        self.by_tuple[tuple].iter().map(|&i| &self.edges[i])
    }

    /// Edges out of `pattern`, in tuple order.
    pub fn pattern_edges(&self, pattern: usize) -> impl Iterator<Item = &Edge> {
        self.by_pattern[pattern].iter().map(|&i| &self.edges[i])
    }

    /// The same node sets with the edges at the given indices removed.
    pub fn without_edges(&self, removed: &[usize]) -> Self {
        let mut drop = vec![false; self.edges.len()];
        for &i in removed {
            drop[i] = true;
        }
        let kept = self
            .edges
            .iter()
            .zip(drop)
            .filter(|(_, d)| !d)
            .map(|(e, _)| *e);
        Self::new(self.m, self.n, kept).expect("subgraph of a valid graph")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    NPages,
    NPatterns,
    Mi,
    PtHits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankVector {
    pub scores: Vec<f64>,
    pub algorithm: Algorithm,
}

impl RankVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Number of distinct patterns extracting each tuple.
pub fn npatterns(g: &BipartiteGraph) -> RankVector {
    RankVector {
        scores: (0..g.n).map(|t| g.by_tuple[t].len() as f64).collect(),
        algorithm: Algorithm::NPatterns,
    }
}

/// Sum of edge weights (supporting documents) into each tuple.
pub fn npages(g: &BipartiteGraph) -> RankVector {
    RankVector {
        scores: (0..g.n)
            .map(|t| {
                g.tuple_edges(t)
                    .map(|e| f64::from(e.weight))
                    .fold(0.0, |a, b| a + b)
            })
            .collect(),
        algorithm: Algorithm::NPages,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtHits {
    pub tol: f64,
    pub max_iter: usize,
    /// Multiply each propagated weight by the edge's document count.
    pub weighted: bool,
}

impl Default for PtHits {
    fn default() -> Self {
        PtHits {
            tol: 1e-8,
            max_iter: 100,
            weighted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtHitsResult {
    pub tuples: RankVector,
    pub patterns: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn l1_normalize(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        for x in v.iter_mut() {
            *x /= sum;
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

impl PtHits {
    pub fn run(&self, g: &BipartiteGraph) -> Result<PtHitsResult, RankError> {
        self.run_from(g, &vec![1.0; g.m])
    }

    /// Runs from the given initial pattern weights.
    pub fn run_from(
        &self,
        g: &BipartiteGraph,
        initial_patterns: &[f64],
    ) -> Result<PtHitsResult, RankError> {
        if g.edges.is_empty() {
            return Err(RankError::EmptyGraph);
        }
        assert_eq!(
            initial_patterns.len(),
            g.m,
            "one initial weight per pattern"
        );
        let factor = |e: &Edge| {
            if self.weighted {
                f64::from(e.weight)
            } else {
                1.0
            }
        };

        let mut wp = initial_patterns.to_vec();
        l1_normalize(&mut wp);
        let mut wt = vec![1.0; g.n];
        l1_normalize(&mut wt);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            iterations += 1;
            let mut new_t: Vec<f64> = (0..g.n)
                .map(|t| {
                    g.tuple_edges(t)
                        .map(|e| wp[e.pattern] * factor(e))
                        .fold(0.0, |a, b| a + b)
                })
                .collect();
            l1_normalize(&mut new_t);
            let mut new_p: Vec<f64> = (0..g.m)
                .map(|p| {
                    g.pattern_edges(p)
                        .map(|e| new_t[e.tuple] * factor(e))
                        .fold(0.0, |a, b| a + b)
                })
                .collect();
            l1_normalize(&mut new_p);
            let delta = max_abs_diff(&new_t, &wt).max(max_abs_diff(&new_p, &wp));
            wt = new_t;
            wp = new_p;
            if delta < self.tol {
                converged = true;
                break;
            }
        }
        Ok(PtHitsResult {
            tuples: RankVector {
                scores: wt,
                algorithm: Algorithm::PtHits,
            },
            patterns: wp,
            iterations,
            converged,
        })
    }
}

/// Anything mapping a graph to one score per tuple.
pub trait Scorer: Sync {
    fn scores(&self, g: &BipartiteGraph) -> Vec<f64>;
}

impl<F> Scorer for F
where
    F: Fn(&BipartiteGraph) -> Vec<f64> + Sync,
{
    fn scores(&self, g: &BipartiteGraph) -> Vec<f64> {
        self(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ranker {
    NPages,
    NPatterns,
    PtHits(PtHits),
}

impl Ranker {
    pub fn name(&self) -> &'static str {
        match self {
            Ranker::NPages => "npages",
            Ranker::NPatterns => "npatterns",
            Ranker::PtHits(_) => "pt-hits",
        }
    }
}

impl Scorer for Ranker {
    fn scores(&self, g: &BipartiteGraph) -> Vec<f64> {
        match self {
            Ranker::NPages => npages(g).scores,
            Ranker::NPatterns => npatterns(g).scores,
            // a graph stripped of all edges scores every tuple 0
            Ranker::PtHits(p) => p
                .run(g)
                .map(|r| r.tuples.scores)
                .unwrap_or_else(|_| vec![0.0; g.tuple_count()]),
        }
    }
}

/// Document counts for one query/candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiCounts {
    /// Documents containing the query text.
    pub df_q: usize,
    /// Documents containing the candidate.
    pub df_r: usize,
    /// Documents where the candidate fills the query's slot.
    pub df_qr: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiScore {
    /// `ln(P(q,r) / (P(q) P(r)))`, `-inf` when the pair never co-occurs.
    pub mi: f64,
    /// `P(q,r) / P(r)`, the rank-equivalent score for a fixed query.
    pub score: f64,
    /// `P(q,r) * mi`, taken as 0 when `P(q,r) = 0`.
    pub weighted_mi: f64,
}

pub fn mutual_information(c: MiCounts) -> Result<MiScore, RankError> {
    if c.n == 0 {
        return Err(RankError::InvalidCounts("corpus size is 0".into()));
    }
    if c.df_qr > c.df_q.min(c.df_r) || c.df_q.max(c.df_r) > c.n {
        return Err(RankError::InvalidCounts(format!(
            "need df_qr <= min(df_q, df_r) <= N, got {c:?}"
        )));
    }
    if c.df_q == 0 || c.df_r == 0 {
        return Err(RankError::Undefined);
    }
    if c.df_qr == 0 {
        return Ok(MiScore {
            mi: f64::NEG_INFINITY,
            score: 0.0,
            weighted_mi: 0.0,
        });
    }
    let n = c.n as f64;
    let (pq, pr, pqr) = (c.df_q as f64 / n, c.df_r as f64 / n, c.df_qr as f64 / n);
    let mi = (pqr / (pq * pr)).ln();
    Ok(MiScore {
        mi,
        score: c.df_qr as f64 / c.df_r as f64,
        weighted_mi: pqr * mi,
    })
}

/// Tuples scoring at least `threshold`, best first; ties go to the smaller
/// key.
pub fn apply_cutoff(v: &RankVector, keys: &[String], threshold: f64) -> Vec<(usize, f64)> {
    assert_eq!(v.len(), keys.len(), "one key per score");
    let mut out: Vec<(usize, f64)> = v
        .scores
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, s)| s >= threshold)
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| keys[a.0].cmp(&keys[b.0])));
    out
}
