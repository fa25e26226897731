//! Query flattening and rule-based rewriting.
//!
//! Rule files list one or more head regexes, a line holding only `->`, and
//! one or more body templates. A blank line ends the rule:
//!
//! ```text
//! @optional-rule-id
//! (.+),? such as (.+)
//! (.+),? including (.+)
//! ->
//! $2, and other $1 && plural($1)
//! $2 is a $1 && singular($1)
//! ```
//!
//! A head must match the whole query text. `$n` in a template recalls the
//! n-th capture of the matching head, after any `&& transform($n)` clauses
//! are applied to it. Transforms are `plural`, `singular`, `past`,
//! `past_participle` and `present_3s`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use fancy_regex::Regex;
use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{Lexicon, VerbForm};
use crate::query::{canonicalize, parse_query, render, QueryAst, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("line {line}: bad regex: {message}")]
    BadRegex { line: usize, message: String },
    #[error("rule {rule}: back-reference ${n} exceeds the capture groups of a head")]
    BadBackReference { rule: String, n: usize },
    #[error("line {line}: unknown transform `{name}`")]
    BadTransformName { line: usize, name: String },
    #[error("line {line}: {message}")]
    EmptyRule { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Plural,
    Singular,
    Past,
    PastParticiple,
    Present3s,
}

impl Transform {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "plural" => Transform::Plural,
            "singular" => Transform::Singular,
            "past" => Transform::Past,
            "past_participle" => Transform::PastParticiple,
            "present_3s" => Transform::Present3s,
            _ => return None,
        })
    }

    pub fn apply(self, lex: &Lexicon, text: &str) -> String {
        match self {
            Transform::Plural => lex.pluralize(text),
            Transform::Singular => lex.singularize(text),
            Transform::Past => lex.inflect_verb(text, VerbForm::Past),
            Transform::PastParticiple => lex.inflect_verb(text, VerbForm::PastParticiple),
            Transform::Present3s => lex.inflect_verb(text, VerbForm::Present3s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteTemplate {
    pub text: String,
    pub transforms: Vec<(Transform, usize)>,
}

impl RewriteTemplate {
    /// Largest `$n` used in the text or by a transform.
    fn max_group(&self) -> usize {
        let refs = back_references(&self.text).into_iter().map(|(_, _, n)| n);
        refs.chain(self.transforms.iter().map(|&(_, n)| n))
            .max()
            .unwrap_or(0)
    }

    fn instantiate(&self, groups: &[Option<String>], lex: &Lexicon) -> String {
        let mut values: Vec<String> = groups
            .iter()
            .map(|g| g.clone().unwrap_or_default())
            .collect();
        for &(t, n) in &self.transforms {
            if let Some(v) = values.get_mut(n) {
                *v = t.apply(lex, v);
            }
        }
        let mut out = String::new();
        let mut last = 0;
        for (start, end, n) in back_references(&self.text) {
            out.push_str(&self.text[last..start]);
            out.push_str(values.get(n).map(String::as_str).unwrap_or(""));
            last = end;
        }
        out.push_str(&self.text[last..]);
        out
    }
}

/// `(start, end, n)` for every `$n` in `text`.
fn back_references(text: &str) -> Vec<(usize, usize, usize)> {
    let bytes = text.as_bytes();
    let mut refs = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'$' {
            let digits = bytes[i + 1..]
                .iter()
                .take_while(|b| b.is_ascii_digit())
                .count();
            if digits > 0 {
                let n = text[i + 1..i + 1 + digits].parse().unwrap_or(usize::MAX);
                refs.push((i, i + 1 + digits, n));
                i += 1 + digits;
                continue;
            }
        }
        i += 1;
    }
    refs
}

#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub id: String,
    heads: Vec<(String, Regex)>,
    pub body: Vec<RewriteTemplate>,
}

impl RewriteRule {
    pub fn heads(&self) -> impl Iterator<Item = &str> {
        self.heads.iter().map(|(s, _)| s.as_str())
    }

    pub fn head_count(&self) -> usize {
        self.heads.len()
    }

    /// Captures of the first head matching the whole text; index 0 is the
    /// full match.
    pub fn match_query(&self, text: &str) -> Option<Vec<Option<String>>> {
        self.heads.iter().find_map(|(_, re)| {
            let caps = re.captures(text).ok().flatten()?;
            Some(
                caps.iter()
                    .map(|m| m.map(|m| m.as_str().to_string()))
                    .collect(),
            )
        })
    }
}

/// Parses a rule file. `source` names the file in generated rule ids.
pub fn parse_rules(text: &str) -> Result<Vec<RewriteRule>, RuleError> {
    parse_rules_named(text, "rule")
}

pub fn parse_rules_named(text: &str, source: &str) -> Result<Vec<RewriteRule>, RuleError> {
    #[derive(PartialEq)]
    enum State {
        Idle,
        Heads,
        Body,
    }

    let mut rules = Vec::new();
    let mut state = State::Idle;
    let mut id: Option<String> = None;
    let mut heads: Vec<(String, Regex, usize)> = Vec::new();
    let mut body: Vec<RewriteTemplate> = Vec::new();
    let mut rule_line = 0;

    let mut finish = |id: &mut Option<String>,
                      heads: &mut Vec<(String, Regex, usize)>,
                      body: &mut Vec<RewriteTemplate>,
                      state: &State,
                      line: usize|
     -> Result<(), RuleError> {
        if *state == State::Heads {
            return Err(RuleError::EmptyRule {
                line,
                message: "rule has no `->` separator".into(),
            });
        }
        if body.is_empty() {
            return Err(RuleError::EmptyRule {
                line,
                message: "rule body is empty".into(),
            });
        }
        let id = id
            .take()
            .unwrap_or_else(|| format!("{source}-{}", rules.len() + 1));
        for tpl in body.iter() {
            let n = tpl.max_group();
            if heads.iter().any(|(_, _, groups)| n > *groups) {
                return Err(RuleError::BadBackReference { rule: id, n });
            }
        }
        rules.push(RewriteRule {
            id,
            heads: heads.drain(..).map(|(s, re, _)| (s, re)).collect(),
            body: std::mem::take(body),
        });
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.starts_with('#') {
            continue;
        }
        if l.is_empty() {
            if state != State::Idle {
                finish(&mut id, &mut heads, &mut body, &state, rule_line)?;
                state = State::Idle;
            }
            continue;
        }
        match state {
            State::Idle if l.starts_with('@') => {
                id = Some(l[1..].trim().to_string());
            }
            State::Idle | State::Heads if l == "->" => {
                if heads.is_empty() {
                    return Err(RuleError::EmptyRule {
                        line,
                        message: "rule has no head".into(),
                    });
                }
                state = State::Body;
            }
            State::Idle | State::Heads => {
                if state == State::Idle {
                    rule_line = line;
                }
                let re = Regex::new(&format!("^(?:{l})$")).map_err(|e| RuleError::BadRegex {
                    line,
                    message: e.to_string(),
                })?;
                let groups = re.captures_len() - 1;
                heads.push((l.to_string(), re, groups));
                state = State::Heads;
            }
            State::Body => body.push(parse_template(l, line)?),
        }
    }
    if state != State::Idle {
        finish(&mut id, &mut heads, &mut body, &state, rule_line)?;
    } else if id.is_some() {
        return Err(RuleError::EmptyRule {
            line: text.lines().count(),
            message: "rule id without a rule".into(),
        });
    }
    Ok(rules)
}

fn parse_template(line_text: &str, line: usize) -> Result<RewriteTemplate, RuleError> {
    let mut parts = line_text.split("&&");
    let text = parts.next().unwrap_or("").trim().to_string();
    if text.is_empty() {
        return Err(RuleError::EmptyRule {
            line,
            message: "empty rewriting".into(),
        });
    }
    let mut transforms = Vec::new();
    for clause in parts {
        let clause = clause.trim();
        let bad = || RuleError::BadTransformName {
            line,
            name: clause.to_string(),
        };
        let (name, rest) = clause.split_once('(').ok_or_else(bad)?;
        let arg = rest.strip_suffix(')').ok_or_else(bad)?.trim();
        let t = Transform::from_name(name.trim()).ok_or_else(|| RuleError::BadTransformName {
            line,
            name: name.trim().to_string(),
        })?;
        let n = arg
            .strip_prefix('$')
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(bad)?;
        transforms.push((t, n));
    }
    Ok(RewriteTemplate { text, transforms })
}

const HYPONYM_RULES: &str = include_str!("../data/rules/hyponym.rules");
const MORPHOLOGY_RULES: &str = include_str!("../data/rules/morphology.rules");
pub const HYPONYM_COMPOUND_RULES: &str = include_str!("../data/rules/hyponym-compound.rules");
pub const EXAMPLE_RULE: &str = include_str!("../data/rules/example.rules");

/// Built-in rule files as `(name, text)`.
pub fn builtin_rule_files() -> [(&'static str, &'static str); 2] {
    [("hyponym", HYPONYM_RULES), ("morphology", MORPHOLOGY_RULES)]
}

pub fn builtin_hyponym_rules() -> Vec<RewriteRule> {
    parse_rules_named(HYPONYM_RULES, "hyponym").expect("built-in hyponym rules parse")
}

pub fn builtin_morphology_rules() -> Vec<RewriteRule> {
    parse_rules_named(MORPHOLOGY_RULES, "morphology").expect("built-in morphology rules parse")
}

pub fn builtin_rules() -> Vec<RewriteRule> {
    let mut rules = builtin_hyponym_rules();
    rules.extend(builtin_morphology_rules());
    rules
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Provenance {
    UserQuery,
    /// Flattened query; lists the substituted similar terms.
    StarExpansion(Vec<String>),
    Rule(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::UserQuery => f.write_str("query"),
            Provenance::StarExpansion(terms) => write!(f, "star:{}", terms.join("+")),
            Provenance::Rule(id) => write!(f, "rule:{id}"),
        }
    }
}

/// A fully instantiated extraction pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub text: String,
    pub arity: usize,
    pub provenance: Provenance,
    #[serde(skip)]
    ast: Option<QueryAst>,
}

impl Pattern {
    pub fn new(text: &str, provenance: Provenance) -> Result<Self, crate::query::QueryError> {
        let (text, ast) = canonicalize(text)?;
        Ok(Pattern {
            text,
            arity: ast.arity(),
            provenance,
            ast: Some(ast),
        })
    }

    pub fn tokens(&self) -> Vec<Token> {
        match &self.ast {
            Some(ast) => ast.tokens().to_vec(),
            None => parse_query(&self.text)
                .map(|a| a.tokens().to_vec())
                .unwrap_or_default(),
        }
    }
}

/// One star-free variant of a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flattened {
    pub query: QueryAst,
    /// Similar terms substituted for the stars; empty for the original.
    pub substituted: Vec<String>,
}

/// Replaces every `*term*` with itself and with each of its similar terms,
/// producing the cartesian product. The original comes first.
pub fn expand_stars(ast: &QueryAst, lex: &Lexicon) -> Vec<Flattened> {
    let stars: Vec<&str> = ast
        .tokens()
        .iter()
        .filter_map(|t| match t {
            Token::Star(w) => Some(w.as_str()),
            _ => None,
        })
        .collect();
    let choices: Vec<Vec<String>> = stars
        .iter()
        .map(|w| {
            std::iter::once(w.to_string())
                .chain(lex.similar_terms(w).iter().cloned())
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut idx = vec![0usize; choices.len()];
    loop {
        let subs: BTreeMap<usize, String> = idx
            .iter()
            .enumerate()
            .map(|(s, &c)| (s, choices[s][c].clone()))
            .collect();
        let text = render(ast, &subs).expect("every star has a substitution");
        if seen.insert(text.clone()) {
            if let Ok(query) = parse_query(&text) {
                let substituted = idx
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(s, &c)| choices[s][c].clone())
                    .collect();
                out.push(Flattened { query, substituted });
            }
        }
        // odometer, last star varies fastest
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// The query itself followed by every rewriting produced by matching rules,
/// duplicates removed.
pub fn apply_rules(query_text: &str, rules: &[RewriteRule], lex: &Lexicon) -> Vec<Pattern> {
    rewrite(query_text, Provenance::UserQuery, rules, lex)
}

fn rewrite(
    query_text: &str,
    origin: Provenance,
    rules: &[RewriteRule],
    lex: &Lexicon,
) -> Vec<Pattern> {
    let Ok(original) = Pattern::new(query_text, origin) else {
        return Vec::new();
    };
    let arity = original.arity;
    let mut seen: HashSet<String> = HashSet::from([original.text.clone()]);
    let mut out = vec![original];
    let source = out[0].text.clone();
    for rule in rules {
        let Some(groups) = rule.match_query(&source) else {
            continue;
        };
        for tpl in &rule.body {
            let text = tpl.instantiate(&groups, lex);
            match Pattern::new(&text, Provenance::Rule(rule.id.clone())) {
                Ok(p) if p.arity == arity => {
                    if seen.insert(p.text.clone()) {
                        out.push(p);
                    }
                }
                Ok(p) => warn!(
                    "rule {} turned {source:?} into {:?} with {} slots instead of {arity}; dropped",
                    rule.id, p.text, p.arity
                ),
                Err(e) => warn!("rule {} produced unparsable {text:?}: {e}", rule.id),
            }
        }
    }
    out
}

/// Star expansion followed by rewriting of every variant, deduplicated by
/// pattern text.
pub fn expand_all(ast: &QueryAst, rules: &[RewriteRule], lex: &Lexicon) -> Vec<Pattern> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for flat in expand_stars(ast, lex) {
        let origin = if flat.substituted.is_empty() {
            Provenance::UserQuery
        } else {
            Provenance::StarExpansion(flat.substituted.clone())
        };
        let text = render(&flat.query, &BTreeMap::new()).expect("star-free query");
        for p in rewrite(&text, origin, rules, lex) {
            if seen.insert(p.text.clone()) {
                out.push(p);
            }
        }
    }
    out
}
