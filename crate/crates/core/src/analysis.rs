//! Rank distances and empirical checks of stability, locality and
//! monotonicity, plus precision/recall against a ground-truth list.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::extract::normalize_key;
use crate::par::Execution;
use crate::rank::{BipartiteGraph, Edge, Ranker, Scorer};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),
    #[error("graph has {edges} edges, cannot remove {k}")]
    InsufficientEdges { edges: usize, k: usize },
    #[error("edge ({0}, {1}) is not in the graph")]
    EdgeNotInGraph(usize, usize),
    #[error("truth list is empty")]
    EmptyTruth,
    #[error("bad graph family: {0}")]
    BadFamily(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Number of pairs with `a[i] < a[j]` and `b[i] > b[j]`. Ties never count.
pub fn kendall_disagreements(a: &[f64], b: &[f64]) -> Result<u64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::DimensionMismatch(a.len(), b.len()));
    }
    let n = a.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]));

    // rank of each b value among the distinct b values, 1-based
    let mut sorted_b: Vec<f64> = b.to_vec();
    sorted_b.sort_by(f64::total_cmp);
    sorted_b.dedup_by(|x, y| x.total_cmp(y).is_eq());
    let rank_b = |v: f64| sorted_b.partition_point(|x| x.total_cmp(&v).is_lt()) + 1;

    let mut fenwick = vec![0u64; sorted_b.len() + 1];
    let add = |tree: &mut Vec<u64>, mut i: usize| {
        while i < tree.len() {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    };
    let prefix = |tree: &Vec<u64>, mut i: usize| {
        let mut s = 0;
        while i > 0 {
            s += tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    };

    let mut count = 0u64;
    let mut inserted = 0u64;
    let mut g = 0;
    while g < n {
        // a group of equal a-values; only strictly smaller ones are in the tree
        let mut h = g;
        while h < n && a[order[h]].total_cmp(&a[order[g]]).is_eq() {
            h += 1;
        }
        for &j in &order[g..h] {
            count += inserted - prefix(&fenwick, rank_b(b[j]));
        }
        for &j in &order[g..h] {
            add(&mut fenwick, rank_b(b[j]));
            inserted += 1;
        }
        g = h;
    }
    Ok(count)
}

/// Normalized Kendall tau distance in [0, 1].
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    let d = kendall_disagreements(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(AnalysisError::DimensionTooSmall(n));
    }
    Ok(2.0 * d as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// Sum of absolute differences (unnormalized).
pub fn l1_sum(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// Normalized Manhattan distance.
pub fn manhattan(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.is_empty() && b.is_empty() {
        return Err(AnalysisError::DimensionTooSmall(0));
    }
    Ok(l1_sum(a, b)? / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GraphFamily {
    /// Each pattern-tuple pair is an edge with probability `p`, weight
    /// uniform in `1..=weight_max`.
    Random {
        m: usize,
        n: usize,
        p: f64,
        weight_max: u32,
        seed: u64,
    },
    /// Two dense blocks, the second missing one edge, joined by `bridges`
    /// random cross edges. Removing a few edges of the first block hands
    /// dominance to the second, which reorders every cross-block pair.
    TwoCommunity {
        m: usize,
        n: usize,
        bridges: usize,
        seed: u64,
    },
}

impl GraphFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::Random { .. } => "random",
            GraphFamily::TwoCommunity { .. } => "two-community",
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            GraphFamily::Random { m, .. } | GraphFamily::TwoCommunity { m, .. } => m,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            GraphFamily::Random { n, .. } | GraphFamily::TwoCommunity { n, .. } => n,
        }
    }

    pub fn generate(&self) -> Result<BipartiteGraph, AnalysisError> {
        let (m, n) = (self.m(), self.n());
        if m == 0 || n == 0 {
            return Err(AnalysisError::BadFamily(
                "m and n must be at least 1".into(),
            ));
        }
        let edges = match *self {
            GraphFamily::Random {
                p,
                weight_max,
                seed,
                ..
            } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(AnalysisError::BadFamily(format!(
                        "edge probability {p} not in (0, 1]"
                    )));
                }
                if weight_max == 0 {
                    return Err(AnalysisError::BadFamily(
                        "weight_max must be at least 1".into(),
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut edges = Vec::new();
                for pattern in 0..m {
                    for tuple in 0..n {
                        if rng.gen_bool(p) {
                            let weight = rng.gen_range(1..=weight_max);
                            edges.push(Edge {
                                pattern,
                                tuple,
                                weight,
                            });
                        }
                    }
                }
                edges
            }
            GraphFamily::TwoCommunity { bridges, seed, .. } => {
                if m < 2 || n < 2 {
                    return Err(AnalysisError::BadFamily(
                        "two communities need m, n >= 2".into(),
                    ));
                }
                let (ma, na) = (m / 2, n / 2);
                let same_block = |p: usize, t: usize| (p < ma) == (t < na);
                let mut edges = Vec::new();
                for pattern in 0..m {
                    for tuple in 0..n {
                        if same_block(pattern, tuple) && (pattern, tuple) != (ma, na) {
                            edges.push(Edge {
                                pattern,
                                tuple,
                                weight: 1,
                            });
                        }
                    }
                }
                let cross = ma * (n - na) + (m - ma) * na;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for i in index::sample(&mut rng, cross, bridges.min(cross)).into_vec() {
                    let (pattern, tuple) = if i < ma * (n - na) {
                        (i / (n - na), na + i % (n - na))
                    } else {
                        let i = i - ma * (n - na);
                        (ma + i / na, i % na)
                    };
                    edges.push(Edge {
                        pattern,
                        tuple,
                        weight: 1,
                    });
                }
                edges
            }
        };
        Ok(BipartiteGraph::new(m, n, edges).expect("generated edges are distinct"))
    }
}

/// Every bipartite graph on `m` patterns and `n` tuples with unit weights.
pub fn enumerate_graphs(m: usize, n: usize) -> impl Iterator<Item = BipartiteGraph> {
    let cells = m * n;
    assert!(cells < 24, "too many graphs to enumerate");
    (0u32..1 << cells).map(move |mask| {
        let pairs: Vec<(usize, usize)> = (0..cells)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| (b / n, b % n))
            .collect();
        BipartiteGraph::from_pairs(m, n, &pairs).expect("distinct pairs")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Distance {
    KendallTau,
    Manhattan,
}

impl Distance {
    pub fn name(self) -> &'static str {
        match self {
            Distance::KendallTau => "kendall-tau",
            Distance::Manhattan => "manhattan",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StabilityConfig {
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            k: 1,
            samples: 200,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

/// Graphs with at most this many edges get every k-subset removed, not a sample.
pub const EXHAUSTIVE_EDGE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub family: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub scorer: String,
    pub distance: Distance,
    pub measurements: usize,
    pub observed_max: f64,
    /// None where no bound is claimed (PT-hits).
    pub bound: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("family\tm\tn\tk\tmetric\tobserved_max\tbound\tpass\n");
        for r in &self.rows {
            let bound = r.bound.map_or("-".to_string(), |b| format!("{b:.8}"));
            let pass = match r.pass {
                Some(true) => "yes",
                Some(false) => "no",
                None => "-",
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}:{}\t{:.8}\t{}\t{}",
                r.family,
                r.m,
                r.n,
                r.k,
                r.scorer,
                r.distance.name(),
                r.observed_max,
                bound,
                pass
            );
        }
        out
    }
}

fn combinations(total: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, total: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..total {
            cur.push(i);
            go(i + 1, total, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, total, k, &mut Vec::new(), &mut out);
    out
}

/// The edge subsets removed from `g`: all of them for tiny graphs,
/// otherwise `samples` seeded random draws.
pub fn removal_sets(
    g: &BipartiteGraph,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, AnalysisError> {
    let e = g.edge_count();
    if k > e || (k == e && k > 0) {
        return Err(AnalysisError::InsufficientEdges { edges: e, k });
    }
    if e <= EXHAUSTIVE_EDGE_LIMIT {
        return Ok(combinations(e, k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..samples)
        .map(|_| {
            let mut s = index::sample(&mut rng, e, k).into_vec();
            s.sort_unstable();
            s
        })
        .collect())
}

struct Measured {
    disagreements: u64,
    l1: f64,
}

/// Perturbs every family's graph and records the worst rank change per
/// scorer. NPatterns and NPages rows are checked against their bounds with
/// integer arithmetic: at most k·n disagreeing pairs, and an absolute score
/// change of at most k (NPatterns) or c·k (NPages, c the largest weight).
pub fn stability_experiment(
    scorers: &[Ranker],
    families: &[GraphFamily],
    cfg: &StabilityConfig,
) -> Result<StabilityReport, AnalysisError> {
    let mut report = StabilityReport::default();
    for (gi, family) in families.iter().enumerate() {
        let g = family.generate()?;
        let n = g.tuple_count();
        if n < 2 {
            return Err(AnalysisError::DimensionTooSmall(n));
        }
        let sets = removal_sets(&g, cfg.k, cfg.samples, cfg.seed.wrapping_add(gi as u64))?;
        for scorer in scorers {
            let base = scorer.scores(&g);
            let measured: Vec<Measured> = cfg.exec.map(&sets, |set| {
                let after = scorer.scores(&g.without_edges(set));
                Measured {
                    disagreements: kendall_disagreements(&base, &after).expect("same dimension"),
                    l1: l1_sum(&base, &after).expect("same dimension"),
                }
            });
            let max_d = measured.iter().map(|x| x.disagreements).max().unwrap_or(0);
            let max_l1 = measured.iter().map(|x| x.l1).fold(0.0, f64::max);
            let (k, nf) = (cfg.k as f64, n as f64);
            let c = f64::from(g.max_weight().max(1));
            let (kt_bound, l1_bound) = match scorer {
                Ranker::NPatterns => (Some(2.0 * k / (nf - 1.0)), Some((k / nf, k))),
                Ranker::NPages => (Some(2.0 * k / (nf - 1.0)), Some((c * k / nf, c * k))),
                Ranker::PtHits(_) => (None, None),
            };
            let row = |distance, observed_max, bound, pass| StabilityRow {
                family: family.name().to_string(),
                m: g.pattern_count(),
                n,
                k: cfg.k,
                scorer: scorer.name().to_string(),
                distance,
                measurements: measured.len(),
                observed_max,
                bound,
                pass,
            };
            report.rows.push(row(
                Distance::KendallTau,
                2.0 * max_d as f64 / (nf * (nf - 1.0)),
                kt_bound,
                kt_bound.map(|_| max_d <= (cfg.k * n) as u64),
            ));
            report.rows.push(row(
                Distance::Manhattan,
                max_l1 / nf,
                l1_bound.map(|b| b.0),
                l1_bound.map(|b| max_l1 <= b.1),
            ));
        }
    }
    Ok(report)
}

/// Tuples `above` and `below` swapped strict order after an edge removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Flip {
    /// Ranked strictly lower than `below` before, strictly higher after.
    pub rose: usize,
    pub fell: usize,
}

/// Pairs of tuples, neither touching edge `(pattern, tuple)`, whose strict
/// order flips when the edge is removed.
pub fn locality_check(
    f: &dyn Scorer,
    g: &BipartiteGraph,
    edge: (usize, usize),
) -> Result<Vec<Flip>, AnalysisError> {
    locality_check_with_margin(f, g, edge, 0.0)
}

/// As [`locality_check`], counting a strict order only when the scores
/// differ by more than `margin` (for iterative scorers).
pub fn locality_check_with_margin(
    f: &dyn Scorer,
    g: &BipartiteGraph,
    edge: (usize, usize),
    margin: f64,
) -> Result<Vec<Flip>, AnalysisError> {
    let idx = g
        .edge_index(edge.0, edge.1)
        .ok_or(AnalysisError::EdgeNotInGraph(edge.0, edge.1))?;
    let before = f.scores(g);
    let after = f.scores(&g.without_edges(&[idx]));
    let mut flips = Vec::new();
    for i in 0..g.tuple_count() {
        for j in 0..g.tuple_count() {
            if i == edge.1 || j == edge.1 {
                continue;
            }
            if before[j] - before[i] > margin && after[i] - after[j] > margin {
                flips.push(Flip { rose: i, fell: j });
            }
        }
    }
    Ok(flips)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    /// Every pattern extracting `dominated` also extracts `dominating`,
    /// with at least the same weight...
    pub dominated: usize,
    pub dominating: usize,
    /// ...yet `dominating` scored lower.
    pub scores: (f64, f64),
}

/// Tuple pairs where the dominating tuple scored strictly lower.
pub fn monotonicity_check(f: &dyn Scorer, g: &BipartiteGraph) -> Vec<MonotonicityViolation> {
    let s = f.scores(g);
    let n = g.tuple_count();
    let weight = |p: usize, t: usize| g.edge_index(p, t).map(|i| g.edges()[i].weight);
    let mut out = Vec::new();
    for t1 in 0..n {
        for t2 in 0..n {
            if t1 == t2 {
                continue;
            }
            let dominated = g
                .tuple_edges(t1)
                .all(|e| weight(e.pattern, t2).is_some_and(|w| w >= e.weight));
            if dominated && s[t2] < s[t1] {
                out.push(MonotonicityViolation {
                    dominated: t1,
                    dominating: t2,
                    scores: (s[t1], s[t2]),
                });
            }
        }
    }
    out
}

/// Ground truth: one entry per line, `|`-separated alternate spellings.
#[derive(Debug, Clone)]
pub struct Truth {
    entries: Vec<Vec<String>>,
    index: HashMap<String, usize>,
}

impl Truth {
    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let alts: Vec<String> = line
                .split('|')
                .map(normalize_key)
                .filter(|a| !a.is_empty())
                .collect();
            if alts.is_empty() {
                continue;
            }
            for a in &alts {
                index.entry(a.clone()).or_insert(entries.len());
            }
            entries.push(alts);
        }
        if entries.is_empty() {
            return Err(AnalysisError::EmptyTruth);
        }
        Ok(Truth { entries, index })
    }

    pub fn load(path: &Path) -> Result<Self, AnalysisError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnalysisError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The entry a candidate names, if any.
    pub fn lookup(&self, candidate: &str) -> Option<usize> {
        self.index.get(&normalize_key(candidate)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub rank: usize,
    pub correct: bool,
    pub recall: f64,
    pub precision: f64,
}

/// One point per rank position. A candidate is correct when it names a
/// truth entry; recall counts distinct entries found.
pub fn precision_recall(ranked: &[String], truth: &Truth) -> Vec<PrPoint> {
    let mut found = vec![false; truth.len()];
    let (mut correct, mut distinct) = (0usize, 0usize);
    ranked
        .iter()
        .enumerate()
        .map(|(i, cand)| {
            let hit = truth.lookup(cand);
            if let Some(e) = hit {
                correct += 1;
                if !found[e] {
                    found[e] = true;
                    distinct += 1;
                }
            }
            PrPoint {
                rank: i + 1,
                correct: hit.is_some(),
                recall: distinct as f64 / truth.len() as f64,
                precision: correct as f64 / (i + 1) as f64,
            }
        })
        .collect()
}

/// Precision at the first rank whose recall reaches `recall`.
pub fn precision_at_recall(points: &[PrPoint], recall: f64) -> Option<f64> {
    points
        .iter()
        .find(|p| p.recall >= recall)
        .map(|p| p.precision)
}

pub fn pr_to_tsv(points: &[PrPoint]) -> String {
    let mut out = String::from("rank\tcorrect\trecall\tprecision\n");
    for p in points {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}",
            p.rank,
            u8::from(p.correct),
            p.recall,
            p.precision
        );
    }
    out
}
