//! End-to-end query evaluation: flatten, rewrite, extract, rank.

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{
    layout_document_frequency, phrase_document_frequency, tokenize, Corpus, PatternLayout,
};
use crate::extract::{extract_all_with, Extraction};
use crate::lexicon::Lexicon;
use crate::par::Execution;
use crate::query::{parse_query, QueryAst, QueryError, Token};
use crate::rank::{
    apply_cutoff, mutual_information, npages, npatterns, Algorithm, MiCounts, PtHits, RankVector,
};
use crate::rewrite::{expand_all, Provenance, RewriteRule};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("query must contain at least one %")]
    NoSlots,
    #[error("snippet cap must be at least 1")]
    ZeroCap,
    #[error("cutoff must be a non-negative number")]
    BadCutoff,
}

#[derive(Debug, Clone, Copy)]
pub struct QueryConfig {
    pub cap: usize,
    pub rank: Algorithm,
    pub cutoff: f64,
    pub weighted_edges: bool,
    pub exec: Execution,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            cap: 200,
            rank: Algorithm::PtHits,
            cutoff: 0.0,
            weighted_edges: false,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternRow {
    pub text: String,
    pub provenance: String,
    /// PT-hits pattern weight, or the sum of the ranker's tuple scores.
    pub weight: f64,
    pub tuples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvidenceRow {
    pub pattern: String,
    pub doc: usize,
    pub source: String,
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub rank: usize,
    pub values: Vec<String>,
    pub key: String,
    pub score: f64,
    pub pages: u64,
    pub patterns: usize,
    pub variants: Vec<String>,
    pub evidence: Vec<EvidenceRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryResult {
    pub query: String,
    pub algorithm: Algorithm,
    pub patterns: Vec<PatternRow>,
    pub results: Vec<ResultRow>,
    #[serde(skip)]
    pub extraction: Extraction,
}

impl QueryResult {
    /// Result keys, best first.
    pub fn ranked_keys(&self) -> Vec<String> {
        self.results.iter().map(|r| r.key.clone()).collect()
    }
}

pub fn run_query(
    query: &str,
    rules: &[RewriteRule],
    lex: &Lexicon,
    corpus: &Corpus,
    cfg: &QueryConfig,
) -> Result<QueryResult, PipelineError> {
    if cfg.cap == 0 {
        return Err(PipelineError::ZeroCap);
    }
    if cfg.cutoff.is_nan() || cfg.cutoff < 0.0 {
        return Err(PipelineError::BadCutoff);
    }
    let ast = parse_query(query)?;
    if ast.arity() == 0 {
        return Err(PipelineError::NoSlots);
    }
    let patterns = expand_all(&ast, rules, lex);
    let ex = extract_all_with(cfg.exec, &patterns, corpus, corpus, cfg.cap, lex);
    let g = &ex.graph;

    let (scores, pattern_weights) = match cfg.rank {
        Algorithm::PtHits => {
            let pt = PtHits {
                weighted: cfg.weighted_edges,
                ..PtHits::default()
            };
            match pt.run(g) {
                Ok(r) => (r.tuples, r.patterns),
                Err(_) => (empty(Algorithm::PtHits, 0), vec![0.0; patterns.len()]),
            }
        }
        other => {
            let v = match other {
                Algorithm::NPages => npages(g),
                Algorithm::NPatterns => npatterns(g),
                _ => mi_scores(&ast, &ex, corpus),
            };
            let w = (0..g.pattern_count())
                .map(|p| {
                    g.pattern_edges(p)
                        .map(|e| v.scores[e.tuple])
                        .fold(0.0, |a, b| a + b)
                })
                .collect();
            (v, w)
        }
    };

    let pattern_rows = ex
        .patterns
        .iter()
        .enumerate()
        .map(|(i, p)| PatternRow {
            text: p.text.clone(),
            provenance: provenance_label(&p.provenance),
            weight: pattern_weights[i],
            tuples: g.pattern_edges(i).count(),
        })
        .collect();

    let keys = ex.tuple_keys();
    let pages = npages(g).scores;
    let results = apply_cutoff(&scores, &keys, cfg.cutoff)
        .into_iter()
        .enumerate()
        .map(|(rank, (t, score))| ResultRow {
            rank: rank + 1,
            values: ex.tuples[t].values.clone(),
            key: ex.tuples[t].key.join(" | "),
            score,
            pages: pages[t] as u64,
            patterns: g.tuple_edges(t).count(),
            variants: ex.variants[t]
                .iter()
                .map(|v| v.0.replace('\t', " | "))
                .collect(),
            evidence: ex
                .evidence_for(t)
                .map(|e| EvidenceRow {
                    pattern: ex.patterns[e.pattern].text.clone(),
                    doc: e.doc,
                    source: corpus.documents[e.doc].source.clone(),
                    offset: e.offset,
                })
                .collect(),
        })
        .collect();

    Ok(QueryResult {
        query: ast.to_query_string(),
        algorithm: cfg.rank,
        patterns: pattern_rows,
        results,
        extraction: ex,
    })
}

fn empty(algorithm: Algorithm, n: usize) -> RankVector {
    RankVector {
        scores: vec![0.0; n],
        algorithm,
    }
}

fn provenance_label(p: &Provenance) -> String {
    p.to_string()
}

fn folded_words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.folded).collect()
}

/// P(q,r)/P(r) per tuple, from document frequencies of the user query's
/// literal text, the candidate, and the query with the candidate in its slots.
fn mi_scores(ast: &QueryAst, ex: &Extraction, corpus: &Corpus) -> RankVector {
    let literal_runs: Vec<Vec<String>> = {
        let mut runs = vec![Vec::new()];
        for t in ast.tokens() {
            match t {
                Token::Slot(_) => runs.push(Vec::new()),
                Token::Literal(w) | Token::Star(w) => {
                    runs.last_mut().unwrap().push(w.to_lowercase())
                }
            }
        }
        runs.into_iter().filter(|r| !r.is_empty()).collect()
    };
    let df_q = phrase_document_frequency(&literal_runs, corpus);
    let n = corpus.doc_count();
    let scores = ex
        .tuples
        .iter()
        .map(|tuple| {
            let phrases: Vec<Vec<String>> = tuple.values.iter().map(|v| folded_words(v)).collect();
            let df_r = phrase_document_frequency(&phrases, corpus);
            let filled: Vec<Token> = ast
                .tokens()
                .iter()
                .flat_map(|t| match t {
                    Token::Slot(i) => phrases[*i]
                        .iter()
                        .map(|w| Token::Literal(w.clone()))
                        .collect(),
                    other => vec![other.clone()],
                })
                .collect();
            let df_qr = layout_document_frequency(&PatternLayout::from_tokens(&filled), corpus);
            mutual_information(MiCounts {
                df_q,
                df_r,
                df_qr,
                n,
            })
            .map(|s| s.score)
            .unwrap_or(0.0)
        })
        .collect();
    RankVector {
        scores,
        algorithm: Algorithm::Mi,
    }
}
