//! Wildcard query syntax.
//!
//! A query is a whitespace-separated sequence of words where `%` marks a
//! noun-phrase extraction slot and `*word*` asks for the word to be expanded
//! with similar terms. Commas are split off into their own literal tokens so
//! list-style patterns ("US states, including %") keep their punctuation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("unbalanced `*` in query (found {0} stars)")]
    UnbalancedStar(usize),
    #[error("empty `**` term at byte {0}")]
    EmptyStarTerm(usize),
    #[error("two adjacent `%` slots at token {0}; put a word between them")]
    AdjacentPercentSlots(usize),
    #[error("`*{0}*` wraps more than one word")]
    StarAroundMultiWord(String),
    #[error("no substitution given for star term {0}")]
    MissingSubstitution(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    Literal(String),
    /// `%`, numbered left to right from 0.
    Slot(usize),
    /// `*word*`
    Star(String),
}

impl Token {
    pub fn is_slot(&self) -> bool {
        matches!(self, Token::Slot(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryAst {
    tokens: Vec<Token>,
    arity: usize,
}

impl QueryAst {
    /// Builds an AST from tokens, renumbering slots left to right.
    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self, QueryError> {
        if tokens.is_empty() {
            return Err(QueryError::EmptyQuery);
        }
        let mut arity = 0;
        let mut renumbered = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.into_iter().enumerate() {
            match tok {
                Token::Slot(_) => {
                    if matches!(renumbered.last(), Some(Token::Slot(_))) {
                        return Err(QueryError::AdjacentPercentSlots(i));
                    }
                    renumbered.push(Token::Slot(arity));
                    arity += 1;
                }
                Token::Star(w) => {
                    if w.is_empty() {
                        return Err(QueryError::EmptyStarTerm(i));
                    }
                    if w.chars().any(char::is_whitespace) {
                        return Err(QueryError::StarAroundMultiWord(w));
                    }
                    renumbered.push(Token::Star(w));
                }
                lit => renumbered.push(lit),
            }
        }
        Ok(QueryAst {
            tokens: renumbered,
            arity,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn star_count(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| matches!(t, Token::Star(_)))
            .count()
    }

    /// Renders the query with `*word*` markers intact.
    pub fn to_query_string(&self) -> String {
        join_tokens(self.tokens.iter().map(|t| match t {
            Token::Literal(w) => w.clone(),
            Token::Slot(_) => "%".to_string(),
            Token::Star(w) => format!("*{w}*"),
        }))
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_query_string())
    }
}

/// Joins tokens with single spaces; a comma attaches to the word before it.
pub(crate) fn join_tokens<I: IntoIterator<Item = String>>(tokens: I) -> String {
    let mut out = String::new();
    for tok in tokens {
        if !out.is_empty() && tok != "," {
            out.push(' ');
        }
        out.push_str(&tok);
    }
    out
}

pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    let stars = text.matches('*').count();
    if stars % 2 == 1 {
        return Err(QueryError::UnbalancedStar(stars));
    }

    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<Token>| {
        if !word.is_empty() {
            tokens.push(Token::Literal(std::mem::take(word)));
        }
    };

    let mut chars = text.char_indices();
    while let Some((pos, c)) = chars.next() {
        match c {
            c if c.is_whitespace() => flush(&mut word, &mut tokens),
            ',' => {
                flush(&mut word, &mut tokens);
                tokens.push(Token::Literal(",".into()));
            }
            '%' => {
                flush(&mut word, &mut tokens);
                tokens.push(Token::Slot(0));
            }
            '*' => {
                flush(&mut word, &mut tokens);
                let mut term = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '*' {
                        closed = true;
                        break;
                    }
                    term.push(c);
                }
                if !closed {
                    return Err(QueryError::UnbalancedStar(stars));
                }
                if term.is_empty() {
                    return Err(QueryError::EmptyStarTerm(pos));
                }
                if term.chars().any(char::is_whitespace) {
                    return Err(QueryError::StarAroundMultiWord(term.trim().to_string()));
                }
                tokens.push(Token::Star(term));
            }
            c => word.push(c),
        }
    }
    flush(&mut word, &mut tokens);
    QueryAst::from_tokens(tokens)
}

/// Renders a query, replacing star terms by position (0-based among the
/// stars). An empty map keeps every star's own word.
pub fn render(
    ast: &QueryAst,
    star_substitutions: &BTreeMap<usize, String>,
) -> Result<String, QueryError> {
    let mut star = 0;
    let mut parts = Vec::with_capacity(ast.tokens.len());
    for tok in &ast.tokens {
        parts.push(match tok {
            Token::Literal(w) => w.clone(),
            Token::Slot(_) => "%".into(),
            Token::Star(w) => {
                let idx = star;
                star += 1;
                if star_substitutions.is_empty() {
                    w.clone()
                } else {
                    star_substitutions
                        .get(&idx)
                        .cloned()
                        .ok_or(QueryError::MissingSubstitution(idx))?
                }
            }
        });
    }
    Ok(join_tokens(parts))
}

/// Parses then re-renders a star-free query text into canonical spacing.
pub fn canonicalize(text: &str) -> Result<(String, QueryAst), QueryError> {
    let ast = parse_query(text)?;
    let rendered = render(&ast, &BTreeMap::new())?;
    Ok((rendered, ast))
}
