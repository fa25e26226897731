//! Noun-phrase chunking and binding of `%` slots.
//!
//! The chunker is rule based. A noun phrase is an optional determiner,
//! any number of adjectives and one or more nouns, where a noun is
//!
//! - a word listed in the lexicon (or the plural of one),
//! - a capitalized word inside the sentence, or
//! - a capitalized first word that is listed or followed by another
//!   capitalized word.
//!
//! Capitalized words on the lexicon's stoplist are never proper nouns.
//! Chunks are maximal and taken left to right.
//!
//! A slot binds the noun phrase touching its literal neighbour. Lists such
//! as "Harry Potter, Shrek and Spiderman" bind one tuple per member.

use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PatternLayout, Sentence, SnippetBackend};
use crate::lexicon::Lexicon;
use crate::par::Execution;
use crate::rank::{BipartiteGraph, Edge};
use crate::rewrite::Pattern;

/// Upper bound on tuples emitted for one alignment of a multi-slot pattern.
pub const MAX_TUPLES_PER_SENTENCE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounPhrase {
    pub text: String,
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateTuple {
    pub values: Vec<String>,
    /// Case-folded, whitespace-collapsed values; the identity of the tuple.
    pub key: Vec<String>,
}

impl CandidateTuple {
    pub fn new(values: Vec<String>) -> Self {
        let key = values.iter().map(|v| normalize_key(v)).collect();
        CandidateTuple { values, key }
    }

    /// The key as one string, columns separated by tabs.
    pub fn key_string(&self) -> String {
        self.key.join("\t")
    }
}

pub fn normalize_key(value: &str) -> String {
    value
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Evidence {
    pub pattern: usize,
    pub tuple: usize,
    pub doc: usize,
    /// Byte offset of the sentence in its document.
    pub offset: usize,
}

struct Chunker<'a> {
    sentence: &'a Sentence,
    folded: Vec<&'a str>,
    lex: &'a Lexicon,
    first_word: usize,
}

impl<'a> Chunker<'a> {
    fn new(sentence: &'a Sentence, lex: &'a Lexicon) -> Self {
        let first_word = sentence
            .tokens
            .iter()
            .position(|t| t.is_word())
            .unwrap_or(0);
        Chunker {
            sentence,
            folded: sentence.folded(),
            lex,
            first_word,
        }
    }

    fn capitalized(&self, i: usize) -> bool {
        self.sentence.tokens[i]
            .surface
            .chars()
            .next()
            .is_some_and(char::is_uppercase)
    }

    fn is_noun(&self, i: usize) -> bool {
        let tok = &self.sentence.tokens[i];
        if !tok.is_word() {
            return false;
        }
        if self.lex.is_noun(&tok.folded) {
            return true;
        }
        if !self.capitalized(i) || self.lex.is_stopword(&tok.folded) {
            return false;
        }
        if i != self.first_word {
            return true;
        }
        self.sentence
            .tokens
            .get(i + 1)
            .is_some_and(|_| self.capitalized(i + 1) && !self.lex.is_stopword(self.folded[i + 1]))
    }

    /// End of the longest chunk starting at `i` that stays below `end`.
    fn chunk_at(&self, i: usize, end: usize) -> Option<usize> {
        let mut j = i;
        if self.lex.is_determiner(self.folded[j]) {
            j += 1;
        }
        // two live states: still reading adjectives, or inside the nouns
        let (mut adj_phase, mut noun_phase) = (true, false);
        let mut best = None;
        while j < end {
            let (len, noun) = match self.lex.multiword_noun_len(&self.folded[j..end]) {
                Some(len) => (len, true),
                None => (1, self.is_noun(j)),
            };
            let adj = len == 1 && self.lex.is_adjective(self.folded[j]);
            let next_noun = (adj_phase || noun_phase) && noun;
            let next_adj = adj_phase && adj;
            if !next_noun && !next_adj {
                break;
            }
            j += len;
            if next_noun {
                best = Some(j);
            }
            noun_phase = next_noun;
            adj_phase = next_adj;
        }
        best
    }

    fn chunks(&self, range: Range<usize>) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut i = range.start;
        while i < range.end {
            match self.chunk_at(i, range.end) {
                Some(e) => {
                    out.push(i..e);
                    i = e;
                }
                None => i += 1,
            }
        }
        out
    }

    fn is_conj(&self, i: usize) -> bool {
        matches!(self.folded[i], "and" | "or")
    }

    /// Noun phrases of a list starting exactly at `region.start`.
    fn list_forward(&self, region: Range<usize>) -> Vec<Range<usize>> {
        let chunks = self.chunks(region.clone());
        let starting_at = |pos: usize| chunks.iter().find(|c| c.start == pos).cloned();
        let Some(first) = starting_at(region.start) else {
            return Vec::new();
        };
        let mut end = first.end;
        let mut out = vec![first];
        loop {
            let mut next = end;
            if next < region.end && self.folded[next] == "," {
                next += 1;
            }
            if next < region.end && self.is_conj(next) {
                next += 1;
            }
            if next == end {
                break;
            }
            match starting_at(next) {
                Some(c) => {
                    end = c.end;
                    out.push(c);
                }
                None => break,
            }
        }
        out
    }

    /// Noun phrases of a list ending exactly at `region.end`.
    fn list_backward(&self, region: Range<usize>) -> Vec<Range<usize>> {
        let chunks = self.chunks(region.clone());
        let ending_at = |pos: usize| chunks.iter().find(|c| c.end == pos).cloned();
        let Some(last) = ending_at(region.end) else {
            return Vec::new();
        };
        let mut start = last.start;
        let mut out = vec![last];
        loop {
            let mut prev = start;
            if prev > region.start && self.is_conj(prev - 1) {
                prev -= 1;
            }
            if prev > region.start && self.folded[prev - 1] == "," {
                prev -= 1;
            }
            if prev == start {
                break;
            }
            match ending_at(prev) {
                Some(c) => {
                    start = c.start;
                    out.push(c);
                }
                None => break,
            }
        }
        out.reverse();
        out
    }

    /// Noun phrases exactly covering `region`, or nothing.
    fn list_covering(&self, region: Range<usize>) -> Vec<Range<usize>> {
        let list = self.list_forward(region.clone());
        if list.last().is_some_and(|c| c.end == region.end) {
            list
        } else {
            Vec::new()
        }
    }
}

/// Maximal noun-phrase chunks of a sentence, left to right.
pub fn chunk_noun_phrases(sentence: &Sentence, lex: &Lexicon) -> Vec<NounPhrase> {
    let c = Chunker::new(sentence, lex);
    c.chunks(0..sentence.tokens.len())
        .into_iter()
        .map(|span| NounPhrase {
            text: sentence.surface(span.clone()),
            span,
        })
        .collect()
}

/// Tuples extracted from one sentence by one pattern.
pub fn match_pattern(pattern: &Pattern, sentence: &Sentence, lex: &Lexicon) -> Vec<CandidateTuple> {
    match_layout(&PatternLayout::new(pattern), sentence, lex)
}

fn match_layout(layout: &PatternLayout, sentence: &Sentence, lex: &Lexicon) -> Vec<CandidateTuple> {
    let chunker = Chunker::new(sentence, lex);
    let n = sentence.tokens.len();
    let mut out: Vec<CandidateTuple> = Vec::new();
    for al in layout.alignments(&chunker.folded) {
        let slots = al.slots.len();
        let bindings: Vec<Vec<Range<usize>>> = al
            .slots
            .iter()
            .enumerate()
            .map(|(i, region)| {
                let leading = region.start == 0 && i == 0;
                let trailing = region.end == n && i + 1 == slots;
                match (leading, trailing) {
                    (true, false) => chunker.list_backward(region.clone()),
                    (false, true) => chunker.list_forward(region.clone()),
                    _ => chunker.list_covering(region.clone()),
                }
            })
            .collect();
        if bindings.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; slots];
        let mut emitted = 0;
        'product: loop {
            let values = idx
                .iter()
                .zip(&bindings)
                .map(|(&i, b)| sentence.surface(b[i].clone()))
                .collect();
            let tuple = CandidateTuple::new(values);
            if !out.iter().any(|t| t.key == tuple.key) {
                out.push(tuple);
            }
            emitted += 1;
            if emitted >= MAX_TUPLES_PER_SENTENCE {
                break;
            }
            let mut pos = slots;
            loop {
                if pos == 0 {
                    break 'product;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < bindings[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    out
}

/// Extracted tuples, their evidence and the pattern-tuple graph.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub patterns: Vec<Pattern>,
    pub tuples: Vec<CandidateTuple>,
    /// Sorted by (pattern, tuple, doc, offset), no duplicates.
    pub evidence: Vec<Evidence>,
    /// Every surface form seen per tuple, most frequent first.
    pub variants: Vec<Vec<(String, usize)>>,
    pub graph: BipartiteGraph,
}

impl Extraction {
    pub fn tuple_keys(&self) -> Vec<String> {
        self.tuples.iter().map(CandidateTuple::key_string).collect()
    }

    /// Evidence supporting `tuple`, in (pattern, doc, offset) order.
    pub fn evidence_for(&self, tuple: usize) -> impl Iterator<Item = &Evidence> {
        self.evidence.iter().filter(move |e| e.tuple == tuple)
    }
}

pub fn extract_all(patterns: &[Pattern], corpus: &Corpus, cap: usize, lex: &Lexicon) -> Extraction {
    extract_all_with(Execution::default(), patterns, corpus, corpus, cap, lex)
}

/// As [`extract_all`], choosing the execution mode and snippet source.
pub fn extract_all_with<B: SnippetBackend + Sync>(
    exec: Execution,
    patterns: &[Pattern],
    backend: &B,
    corpus: &Corpus,
    cap: usize,
    lex: &Lexicon,
) -> Extraction {
    let per_pattern: Vec<Vec<(CandidateTuple, usize, usize)>> = exec.map(patterns, |p| {
        let layout = PatternLayout::new(p);
        backend
            .retrieve(p, cap)
            .into_iter()
            .flat_map(|r| {
                let s = corpus.sentence(r);
                match_layout(&layout, s, lex)
                    .into_iter()
                    .map(move |t| (t, s.doc, s.offset))
            })
            .collect()
    });
    merge(patterns.to_vec(), per_pattern)
}

fn merge(
    patterns: Vec<Pattern>,
    per_pattern: Vec<Vec<(CandidateTuple, usize, usize)>>,
) -> Extraction {
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    let mut keys: Vec<Vec<String>> = Vec::new();
    let mut evidence: BTreeSet<Evidence> = BTreeSet::new();
    // surface -> (count, first seen) per tuple
    let mut surfaces: Vec<HashMap<Vec<String>, (usize, usize)>> = Vec::new();
    let mut seen_order = 0usize;

    for (pattern, matches) in per_pattern.into_iter().enumerate() {
        for (tuple, doc, offset) in matches {
            let next = keys.len();
            let id = *index.entry(tuple.key.clone()).or_insert(next);
            if id == next {
                keys.push(tuple.key.clone());
                surfaces.push(HashMap::new());
            }
            let ev = Evidence {
                pattern,
                tuple: id,
                doc,
                offset,
            };
            if evidence.insert(ev) {
                let entry = surfaces[id].entry(tuple.values).or_insert((0, seen_order));
                entry.0 += 1;
                seen_order += 1;
            }
        }
    }

    let variants: Vec<Vec<(String, usize)>> = surfaces
        .iter()
        .map(|m| {
            let mut v: Vec<(&Vec<String>, &(usize, usize))> = m.iter().collect();
            v.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
            v.into_iter().map(|(s, c)| (s.join("\t"), c.0)).collect()
        })
        .collect();
    let tuples: Vec<CandidateTuple> = keys
        .iter()
        .zip(&variants)
        .map(|(key, vars)| CandidateTuple {
            values: vars[0].0.split('\t').map(String::from).collect(),
            key: key.clone(),
        })
        .collect();

    let mut docs: HashMap<(usize, usize), BTreeSet<usize>> = HashMap::new();
    for e in &evidence {
        docs.entry((e.pattern, e.tuple)).or_default().insert(e.doc);
    }
    let edges = docs.into_iter().map(|((pattern, tuple), d)| Edge {
        pattern,
        tuple,
        weight: d.len() as u32,
    });
    let graph =
        BipartiteGraph::new(patterns.len(), tuples.len(), edges).expect("edges come from evidence");

    Extraction {
        patterns,
        tuples,
        evidence: evidence.into_iter().collect(),
        variants,
        graph,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::Provenance;

    fn sentence(text: &str) -> Sentence {
        let c = Corpus::from_texts([text]);
        c.documents[0].sentences[0].clone()
    }

    fn pattern(text: &str) -> Pattern {
        Pattern::new(text, Provenance::UserQuery).unwrap()
    }

    fn values(tuples: &[CandidateTuple]) -> Vec<Vec<&str>> {
        tuples
            .iter()
            .map(|t| t.values.iter().map(String::as_str).collect())
            .collect()
    }

    const MOVIES: &str =
        "Popular summer movies such as Harry Potter, Shrek and Spiderman appeal to audience of all ages.";
    const EDISON_1: &str = "Thomas Edison is often said to have invented the light bulb.";
    const EDISON_2: &str =
        "We all learned in our history classes that Thomas Edison invented the light bulb in 1879.";

    #[test]
    fn chunks_edison_sentences() {
        let lex = Lexicon::builtin();
        let nps: Vec<String> = chunk_noun_phrases(&sentence(EDISON_2), &lex)
            .into_iter()
            .map(|np| np.text)
            .collect();
        assert!(nps.contains(&"Thomas Edison".to_string()), "{nps:?}");
        assert!(nps.contains(&"the light bulb".to_string()));
        assert!(!nps.iter().any(|np| np.contains("invented")));
        assert!(!nps.iter().any(|np| np.contains("We")));

        let nps: Vec<String> = chunk_noun_phrases(&sentence(EDISON_1), &lex)
            .into_iter()
            .map(|np| np.text)
            .collect();
        assert!(!nps.iter().any(|np| np == "have"));
        assert_eq!(nps[0], "Thomas Edison");
    }

    #[test]
    fn no_noun_evidence_no_chunks() {
        let s = sentence("we all went there and it was fun");
        assert!(chunk_noun_phrases(&s, &Lexicon::empty()).is_empty());
    }

    #[test]
    fn span_matches_surface() {
        let lex = Lexicon::builtin();
        let s = sentence(MOVIES);
        for np in chunk_noun_phrases(&s, &lex) {
            assert!(!np.span.is_empty());
            assert_eq!(np.text, s.surface(np.span.clone()));
        }
    }

    #[test]
    fn extracts_movie_list() {
        let lex = Lexicon::builtin();
        let got = match_pattern(&pattern("summer movies such as %"), &sentence(MOVIES), &lex);
        assert_eq!(values(&got), [["Harry Potter"], ["Shrek"], ["Spiderman"]]);
    }

    #[test]
    fn edison_slot_binding() {
        let lex = Lexicon::builtin();
        let p = pattern("% invented the light bulb");
        assert!(match_pattern(&p, &sentence(EDISON_1), &lex).is_empty());
        assert_eq!(
            values(&match_pattern(&p, &sentence(EDISON_2), &lex)),
            [["Thomas Edison"]]
        );
    }

    #[test]
    fn two_slot_pattern() {
        let mut lex = Lexicon::builtin();
        lex.add_noun("google");
        let got = match_pattern(
            &pattern("% acquired %"),
            &sentence("Google acquired YouTube."),
            &lex,
        );
        assert_eq!(values(&got), [["Google", "YouTube"]]);
        let got = match_pattern(
            &pattern("% acquired %"),
            &sentence("In March Google and Apple acquired YouTube, Skype and Zoom."),
            &lex,
        );
        assert_eq!(got.len(), 6);
        assert_eq!(got[5].values, ["Apple", "Zoom"]);
    }

    #[test]
    fn multi_slot_product_is_capped() {
        let lex = Lexicon::builtin();
        let s = sentence("Then Bo, Cy, Di, Ed and Fa met Gu, Hy, Io, Jo and Ka.");
        let got = match_pattern(&pattern("% met %"), &s, &lex);
        assert_eq!(got.len(), MAX_TUPLES_PER_SENTENCE);
    }

    #[test]
    fn middle_slot_must_be_noun_phrases() {
        let lex = Lexicon::builtin();
        let p = pattern("between % and the river");
        let ok = sentence("It lies between Texas and the river.");
        assert_eq!(values(&match_pattern(&p, &ok, &lex)), [["Texas"]]);
        let bad = sentence("It lies between here and the river.");
        assert!(match_pattern(&p, &bad, &lex).is_empty());
    }

    #[test]
    fn leading_list_binds_backwards() {
        let lex = Lexicon::builtin();
        let s = sentence("Everyone has visited Texas, Ohio and other US states.");
        let got = match_pattern(&pattern("% and other US states"), &s, &lex);
        assert_eq!(values(&got), [["Texas"], ["Ohio"]]);
    }

    #[test]
    fn lexicon_multiword_noun_stays_whole() {
        let lex = Lexicon::builtin();
        let s = sentence("Budgets for areas such as research and development grew.");
        let got = match_pattern(&pattern("areas such as %"), &s, &lex);
        assert_eq!(values(&got), [["research and development"]]);
    }

    #[test]
    fn evidence_weights_count_documents() {
        let lex = Lexicon::builtin();
        let c = Corpus::from_texts([
            "Everyone knows Texas is a US state. They say Texas is a US state again.",
            "Everyone knows Texas is a US state.",
            "Everyone knows Texas is a US state.",
        ]);
        let ex = extract_all(&[pattern("% is a US state")], &c, 200, &lex);
        assert_eq!(ex.tuples.len(), 1);
        assert_eq!(ex.graph.edges()[0].weight, 3);
        assert_eq!(ex.evidence.len(), 4);

        let one = Corpus::from_texts(["Everyone knows Ohio is a US state."]);
        let ex = extract_all(&[pattern("% is a US state")], &one, 200, &lex);
        assert_eq!(ex.graph.edge_count(), 1);
        assert_eq!(ex.graph.edges()[0].weight, 1);
    }

    #[test]
    fn most_frequent_surface_wins() {
        let lex = Lexicon::builtin();
        let c = Corpus::from_texts([
            "Everyone knows NEW YORK is a US state.",
            "Everyone knows New York is a US state.",
            "Everyone knows New York is a US state.",
        ]);
        let ex = extract_all(&[pattern("% is a US state")], &c, 200, &lex);
        assert_eq!(ex.tuples[0].values, ["New York"]);
        assert_eq!(ex.tuples[0].key, ["new york"]);
        assert_eq!(
            ex.variants[0],
            [("New York".to_string(), 2), ("NEW YORK".to_string(), 1)]
        );
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let lex = Lexicon::builtin();
        let c = Corpus::from_texts([
            "US states such as Texas, Ohio and Utah are large.",
            "Everyone knows Ohio is a US state. Voters in Maine and other US states agree.",
        ]);
        let ps: Vec<Pattern> = [
            "US states such as %",
            "% is a US state",
            "% and other US states",
        ]
        .iter()
        .map(|t| pattern(t))
        .collect();
        let a = extract_all_with(Execution::Sequential, &ps, &c, &c, 200, &lex);
        let b = extract_all_with(Execution::Parallel, &ps, &c, &c, 200, &lex);
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.tuples, b.tuples);
        assert_eq!(a.evidence, b.evidence);
        assert_eq!(a.tuples.len(), 4);
    }
}
