//! Plain-text corpus: ingestion, sentence segmentation and pattern
//! retrieval.
//!
//! Retrieval is a linear scan. A sentence matches a pattern when the
//! pattern's literal word runs occur contiguously and in order (ignoring
//! case), leaving at least one token for every `%` slot.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::query::Token;
use crate::rewrite::Pattern;

pub const CORPUS_MAGIC: &str = "wildq-corpus";
pub const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is not valid UTF-8")]
    NotUtf8(PathBuf),
    #[error("{path}: not a corpus file ({message})")]
    BadFormat { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentToken {
    pub surface: String,
    pub folded: String,
}

impl SentToken {
    fn new(surface: &str) -> Self {
        SentToken {
            surface: surface.to_string(),
            folded: surface.to_lowercase(),
        }
    }

    pub fn is_word(&self) -> bool {
        self.surface.chars().any(char::is_alphanumeric)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc: usize,
    /// Byte offset of the sentence in its document.
    pub offset: usize,
    pub end: usize,
    pub tokens: Vec<SentToken>,
}

impl Sentence {
    pub fn folded(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.folded.as_str()).collect()
    }

    pub fn surface(&self, span: Range<usize>) -> String {
        crate::query::join_tokens(self.tokens[span].iter().map(|t| t.surface.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub source: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    documents: usize,
}

impl Corpus {
    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn sentence(&self, r: SentenceRef) -> &Sentence {
        &self.documents[r.doc].sentences[r.index]
    }

    pub fn sentences(&self) -> impl Iterator<Item = (SentenceRef, &Sentence)> {
        self.documents.iter().flat_map(|d| {
            d.sentences
                .iter()
                .enumerate()
                .map(move |(index, s)| (SentenceRef { doc: d.id, index }, s))
        })
    }

    /// Adds a document built from `text`; returns its id.
    pub fn add_text(&mut self, source: &str, text: &str) -> usize {
        let id = self.documents.len();
        let sentences = split_sentences(text)
            .into_iter()
            .filter_map(|span| {
                let tokens = tokenize(&text[span.clone()]);
                (!tokens.is_empty()).then_some(Sentence {
                    doc: id,
                    offset: span.start,
                    end: span.end,
                    tokens,
                })
            })
            .collect();
        self.documents.push(Document {
            id,
            source: source.to_string(),
            sentences,
        });
        id
    }

    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut c = Corpus::default();
        for (i, t) in texts.into_iter().enumerate() {
            c.add_text(&format!("doc{i}"), t);
        }
        c
    }

    /// Writes the corpus as line-delimited JSON: a header line followed by
    /// one line per document.
    pub fn write_to<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut w = BufWriter::new(w);
        let header = Header {
            format: CORPUS_MAGIC.into(),
            version: CORPUS_VERSION,
            documents: self.documents.len(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for d in &self.documents {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let io = |source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let f = fs::File::create(path).map_err(io)?;
        self.write_to(f).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let io = |source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let bad = |message: String| CorpusError::BadFormat {
            path: path.to_path_buf(),
            message,
        };
        let f = fs::File::open(path).map_err(io)?;
        let mut lines = BufReader::new(f).lines();
        let first = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .map_err(io)?;
        let header: Header = serde_json::from_str(&first).map_err(|e| bad(e.to_string()))?;
        if header.format != CORPUS_MAGIC {
            return Err(bad(format!("unexpected format tag {:?}", header.format)));
        }
        if header.version != CORPUS_VERSION {
            return Err(bad(format!("unsupported version {}", header.version)));
        }
        let mut documents = Vec::with_capacity(header.documents);
        for line in lines {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let d: Document = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            if d.id != documents.len() {
                return Err(bad(format!("document id {} out of order", d.id)));
            }
            documents.push(d);
        }
        if documents.len() != header.documents {
            return Err(bad(format!(
                "header announces {} documents, found {}",
                header.documents,
                documents.len()
            )));
        }
        Ok(Corpus { documents })
    }

    /// Whether `path` starts with the corpus file header.
    pub fn is_corpus_file(path: &Path) -> bool {
        let Ok(f) = fs::File::open(path) else {
            return false;
        };
        let mut first = String::new();
        BufReader::new(f).read_line(&mut first).is_ok()
            && serde_json::from_str::<Header>(&first).is_ok_and(|h| h.format == CORPUS_MAGIC)
    }
}

/// Text files named by `paths`; directories contribute every `.txt` file
/// below them in alphabetical order.
pub fn collect_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CorpusError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in walkdir::WalkDir::new(p).sort_by_file_name() {
                let entry = entry.map_err(|e| CorpusError::Io {
                    path: p.clone(),
                    source: e.into(),
                })?;
                if entry.file_type().is_file()
                    && entry.path().extension().is_some_and(|e| e == "txt")
                {
                    files.push(entry.into_path());
                }
            }
        } else if p.exists() {
            files.push(p.clone());
        } else {
            return Err(CorpusError::Io {
                path: p.clone(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "no such file or directory",
                ),
            });
        }
    }
    Ok(files)
}

pub fn ingest(paths: &[PathBuf]) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    for path in collect_files(paths)? {
        let bytes = fs::read(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| CorpusError::NotUtf8(path.clone()))?;
        corpus.add_text(&path.to_string_lossy(), &text);
    }
    Ok(corpus)
}

const ABBREVIATIONS: &[&str] = &[
    "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "jr.", "sr.", "vs.", "e.g.", "i.e.", "u.s.",
    "u.k.", "inc.", "co.", "corp.", "ltd.", "mt.", "gen.", "gov.", "sen.", "rep.", "lt.", "col.",
    "capt.", "no.", "fig.", "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.",
    "sept.", "oct.", "nov.", "dec.",
];

const OPENERS: &[char] = &['"', '\'', '(', '[', '{', '\u{201c}', '\u{2018}'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}'];

fn is_abbreviation(word: &str) -> bool {
    let w = word.trim_start_matches(OPENERS).to_lowercase();
    if ABBREVIATIONS.contains(&w.as_str()) {
        return true;
    }
    // initials and dotted acronyms: "J." or "U.S.A."
    let core = w.trim_end_matches('.');
    !core.is_empty()
        && w.ends_with('.')
        && core
            .split('.')
            .all(|p| p.chars().count() == 1 && p.chars().all(char::is_alphabetic))
}

/// Byte spans of whitespace-separated pieces.
fn pieces(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..text.len());
    }
    out
}

/// Sentence spans: a sentence ends at `.`, `!` or `?` followed by a
/// capitalized word (or the end of text), unless the period belongs to an
/// abbreviation. A blank line always ends a sentence.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let ps = pieces(text);
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, p) in ps.iter().enumerate() {
        let s = *start.get_or_insert(p.start);
        let word = &text[p.clone()];
        let core = word.trim_end_matches(CLOSERS);
        let next = ps.get(i + 1).map(|n| &text[n.clone()]);
        let paragraph = ps
            .get(i + 1)
            .is_some_and(|n| text[p.end..n.start].matches('\n').count() >= 2);
        let terminal = core.ends_with(['.', '!', '?']);
        let next_starts = next.is_none_or(|n| {
            n.trim_start_matches(OPENERS)
                .chars()
                .next()
                .is_some_and(|c| c.is_uppercase() || c.is_numeric())
        });
        let abbrev = core.ends_with('.') && !core.ends_with("..") && is_abbreviation(core);
        if paragraph || (terminal && next_starts && !abbrev) {
            out.push(s..p.end);
            start = None;
        }
    }
    if let (Some(s), Some(last)) = (start, ps.last()) {
        out.push(s..last.end);
    }
    out
}

/// Splits a sentence into tokens. Commas, sentence punctuation, quotes and
/// brackets become separate tokens; abbreviation periods stay attached.
pub fn tokenize(sentence: &str) -> Vec<SentToken> {
    let mut out = Vec::new();
    for p in pieces(sentence) {
        let mut word = &sentence[p];
        while let Some(c) = word.chars().next().filter(|c| OPENERS.contains(c)) {
            out.push(SentToken::new(&word[..c.len_utf8()]));
            word = &word[c.len_utf8()..];
        }
        let mut trailing = Vec::new();
        while let Some(c) = word.chars().last() {
            let split = match c {
                ',' | ';' | ':' | '!' | '?' => true,
                '.' => !is_abbreviation(word),
                c => CLOSERS.contains(&c),
            };
            if !split {
                break;
            }
            let at = word.len() - c.len_utf8();
            trailing.push(&word[at..]);
            word = &word[..at];
        }
        if !word.is_empty() {
            out.push(SentToken::new(word));
        }
        out.extend(trailing.into_iter().rev().map(SentToken::new));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Slot,
    Run(Vec<String>),
}

/// A pattern split into literal runs and slots, for matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternLayout {
    segments: Vec<Segment>,
}

/// Where a pattern's pieces landed in one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    /// Token range available to each slot, in slot order.
    pub slots: Vec<Range<usize>>,
}

impl PatternLayout {
    pub fn new(pattern: &Pattern) -> Self {
        Self::from_tokens(&pattern.tokens())
    }

    pub fn from_tokens(tokens: &[Token]) -> Self {
        let mut segments = Vec::new();
        for t in tokens {
            match t {
                Token::Slot(_) => segments.push(Segment::Slot),
                Token::Literal(w) | Token::Star(w) => {
                    let w = w.to_lowercase();
                    match segments.last_mut() {
                        Some(Segment::Run(run)) => run.push(w),
                        _ => segments.push(Segment::Run(vec![w])),
                    }
                }
            }
        }
        PatternLayout { segments }
    }

    pub fn runs(&self) -> impl Iterator<Item = &[String]> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Run(r) => Some(r.as_slice()),
            Segment::Slot => None,
        })
    }

    /// Every alignment of the pattern in `folded`, one per start position of
    /// the first literal run; later runs take their leftmost position.
    pub fn alignments(&self, folded: &[&str]) -> Vec<Alignment> {
        let runs: Vec<(bool, &[String])> = {
            let mut v = Vec::new();
            let mut slot_before = false;
            for s in &self.segments {
                match s {
                    Segment::Slot => slot_before = true,
                    Segment::Run(r) => {
                        v.push((slot_before, r.as_slice()));
                        slot_before = false;
                    }
                }
            }
            v
        };
        let trailing_slot = matches!(self.segments.last(), Some(Segment::Slot));
        let n = folded.len();

        if runs.is_empty() {
            // a pattern made of a single slot covers the whole sentence
            return if trailing_slot && n > 0 {
                vec![Alignment {
                    slots: std::iter::once(0..n).collect(),
                }]
            } else {
                Vec::new()
            };
        }

        let occurs = |run: &[String], at: usize| {
            at + run.len() <= n && run.iter().zip(&folded[at..]).all(|(a, b)| a == b)
        };

        let mut out = Vec::new();
        let (first_gap, first) = runs[0];
        for start in usize::from(first_gap)..n {
            if !occurs(first, start) {
                continue;
            }
            let mut slots = Vec::new();
            if first_gap {
                slots.push(0..start);
            }
            let mut end = start + first.len();
            let mut ok = true;
            for &(gap, run) in &runs[1..] {
                let from = end + usize::from(gap);
                match (from..n).find(|&at| occurs(run, at)) {
                    Some(at) => {
                        if gap {
                            slots.push(end..at);
                        }
                        end = at + run.len();
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                // later starts cannot place the remaining runs either
                break;
            }
            if trailing_slot {
                if end >= n {
                    continue;
                }
                slots.push(end..n);
            }
            out.push(Alignment { slots });
        }
        out
    }

    pub fn matches(&self, folded: &[&str]) -> bool {
        !self.alignments(folded).is_empty()
    }
}

/// Source of snippets for a pattern. The local corpus scan is the only
/// implementation; a search-engine client would be another.
pub trait SnippetBackend {
    fn retrieve(&self, pattern: &Pattern, cap: usize) -> Vec<SentenceRef>;
}

impl SnippetBackend for Corpus {
    fn retrieve(&self, pattern: &Pattern, cap: usize) -> Vec<SentenceRef> {
        retrieve(pattern, self, cap)
    }
}

/// The first `cap` matching sentences in (document, position) order.
pub fn retrieve(pattern: &Pattern, corpus: &Corpus, cap: usize) -> Vec<SentenceRef> {
    let layout = PatternLayout::new(pattern);
    let runs: Vec<&[String]> = layout.runs().collect();
    corpus
        .sentences()
        .filter(|(_, s)| {
            // cheap prefilter: each run's first word must occur somewhere
            runs.iter()
                .all(|r| s.tokens.iter().any(|t| t.folded == r[0]))
                && layout.matches(&s.folded())
        })
        .map(|(r, _)| r)
        .take(cap)
        .collect()
}

/// Number of documents with at least one sentence matching `pattern`.
pub fn document_frequency(pattern: &Pattern, corpus: &Corpus) -> usize {
    layout_document_frequency(&PatternLayout::new(pattern), corpus)
}

pub fn layout_document_frequency(layout: &PatternLayout, corpus: &Corpus) -> usize {
    corpus
        .documents
        .iter()
        .filter(|d| d.sentences.iter().any(|s| layout.matches(&s.folded())))
        .count()
}

/// Number of documents containing every phrase (as contiguous case-folded
/// token runs, possibly in different sentences).
pub fn phrase_document_frequency(phrases: &[Vec<String>], corpus: &Corpus) -> usize {
    let contains = |s: &Sentence, phrase: &[String]| {
        !phrase.is_empty()
            && s.tokens
                .windows(phrase.len())
                .any(|w| w.iter().zip(phrase).all(|(t, p)| t.folded == *p))
    };
    corpus
        .documents
        .iter()
        .filter(|d| {
            phrases
                .iter()
                .all(|p| d.sentences.iter().any(|s| contains(s, p)))
        })
        .count()
}
