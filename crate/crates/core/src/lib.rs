//! Wildcard queries over a local text corpus.
//!
//! A query such as `US states such as %` or `% is a *country*` is flattened
//! (star terms replaced by similar terms), rewritten through declarative
//! rules into a set of extraction patterns, matched against corpus
//! sentences, and the noun phrases found in `%` positions are ranked.
//!
//! The stages live in their own modules:
//!
//! - [`query`]: wildcard query syntax
//! - [`lexicon`]: similar terms, inflection tables, chunker word lists
//! - [`rewrite`]: rule language, built-in packs, star expansion
//! - [`corpus`]: ingestion, sentence splitting, snippet retrieval
//! - [`extract`]: noun-phrase chunking and slot binding
//! - [`rank`]: NPages, NPatterns, mutual information, PT-hits
//! - [`analysis`]: rank distances, stability/locality/monotonicity checks,
//!   precision and recall
//! - [`pipeline`]: query to ranked tuples in one call
//! - [`par`]: sequential or rayon-parallel execution (`parallel` feature)
//! - [`cli`]: the `wildq` command

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod extract;
pub mod lexicon;
pub mod par;
pub mod pipeline;
pub mod query;
pub mod rank;
pub mod rewrite;

pub use lexicon::Lexicon;
pub use query::{parse_query, QueryAst, Token};
pub use rewrite::{expand_all, Pattern, Provenance, RewriteRule};
