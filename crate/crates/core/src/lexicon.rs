//! Word lists used by star expansion, rule transforms and the chunker.
//!
//! A lexicon directory may contain any of:
//!
//! | file             | format                                              |
//! |------------------|-----------------------------------------------------|
//! | `similar.tsv`    | `word<TAB>term, term, ...`                          |
//! | `inflect.tsv`    | `singular<TAB>plural`                               |
//! | `verbs.tsv`      | `base<TAB>3rd-singular<TAB>past<TAB>past-participle` |
//! | `nouns.txt`      | one noun (or multi-word noun) per line              |
//! | `adjectives.txt` | one adjective per line                              |
//! | `determiners.txt`| one determiner per line                             |
//! | `stoplist.txt`   | capitalized words never taken as proper nouns       |
//!
//! All files are UTF-8; lines starting with `#` are comments.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
}

/// Verb inflection targets usable from rewrite rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerbForm {
    Present3s,
    Past,
    PastParticiple,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct VerbEntry {
    base: String,
    present_3s: String,
    past: String,
    past_participle: String,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    similar: HashMap<String, Vec<String>>,
    plural_of: HashMap<String, String>,
    singular_of: HashMap<String, String>,
    verbs: Vec<VerbEntry>,
    verb_index: HashMap<String, usize>,
    nouns: HashSet<String>,
    multiword_nouns: HashSet<Vec<String>>,
    max_multiword: usize,
    adjectives: HashSet<String>,
    determiners: HashSet<String>,
    proper_stoplist: HashSet<String>,
}

const BUILTIN: &[(&str, &str)] = &[
    ("similar.tsv", include_str!("../data/lexicon/similar.tsv")),
    ("inflect.tsv", include_str!("../data/lexicon/inflect.tsv")),
    ("verbs.tsv", include_str!("../data/lexicon/verbs.tsv")),
    ("nouns.txt", include_str!("../data/lexicon/nouns.txt")),
    (
        "adjectives.txt",
        include_str!("../data/lexicon/adjectives.txt"),
    ),
    (
        "determiners.txt",
        include_str!("../data/lexicon/determiners.txt"),
    ),
    ("stoplist.txt", include_str!("../data/lexicon/stoplist.txt")),
];

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fold(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl Lexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> Self {
        let mut lex = Self::empty();
        for (name, text) in BUILTIN {
            lex.merge_file(name, text)
                .unwrap_or_else(|e| panic!("built-in lexicon is malformed: {e}"));
        }
        lex
    }

    /// Merges every recognised file found in `dir` on top of this lexicon.
    pub fn load_dir(&mut self, dir: &Path) -> Result<(), LexiconError> {
        let io = |path: &Path, source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        };
        if !dir.is_dir() {
            return Err(io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            ));
        }
        for (name, _) in BUILTIN {
            let path = dir.join(name);
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
                self.merge_file(name, &text)?;
            }
        }
        Ok(())
    }

    /// Merges the contents of one lexicon file, dispatching on its name.
    pub fn merge_file(&mut self, name: &str, text: &str) -> Result<(), LexiconError> {
        match name {
            "similar.tsv" => self.merge_similar(text),
            "inflect.tsv" => self.merge_inflections(text),
            "verbs.tsv" => self.merge_verbs(text),
            "nouns.txt" => {
                for (_, l) in content_lines(text) {
                    self.add_noun(l);
                }
                Ok(())
            }
            "adjectives.txt" => {
                self.adjectives
                    .extend(content_lines(text).map(|(_, l)| fold(l)));
                Ok(())
            }
            "determiners.txt" => {
                self.determiners
                    .extend(content_lines(text).map(|(_, l)| fold(l)));
                Ok(())
            }
            "stoplist.txt" => {
                self.proper_stoplist
                    .extend(content_lines(text).map(|(_, l)| fold(l)));
                Ok(())
            }
            other => Err(LexiconError::Parse {
                file: other.into(),
                line: 0,
                message: "unknown lexicon file".into(),
            }),
        }
    }

    fn merge_similar(&mut self, text: &str) -> Result<(), LexiconError> {
        for (line, l) in content_lines(text) {
            let err = |message: &str| LexiconError::Parse {
                file: "similar.tsv".into(),
                line,
                message: message.into(),
            };
            let (key, values) = l
                .split_once('\t')
                .ok_or_else(|| err("expected word<TAB>terms"))?;
            let key = fold(key);
            if key.contains(' ') {
                return Err(err("keys must be single words"));
            }
            let list = self.similar.entry(key.clone()).or_default();
            for v in values.split(',').map(fold).filter(|v| !v.is_empty()) {
                if v != key && !list.contains(&v) {
                    list.push(v);
                }
            }
        }
        Ok(())
    }

    fn merge_inflections(&mut self, text: &str) -> Result<(), LexiconError> {
        for (line, l) in content_lines(text) {
            let mut cols = l.split('\t').map(fold);
            let (Some(sing), Some(plur), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(LexiconError::Parse {
                    file: "inflect.tsv".into(),
                    line,
                    message: "expected singular<TAB>plural".into(),
                });
            };
            // keep the two maps inverse to each other: first mapping wins
            if self.plural_of.get(&sing).is_some_and(|p| *p != plur)
                || self.singular_of.get(&plur).is_some_and(|s| *s != sing)
            {
                warn!(
                    "inflect.tsv:{line}: {sing} -> {plur} conflicts with an earlier entry, skipped"
                );
                continue;
            }
            self.plural_of.insert(sing.clone(), plur.clone());
            self.singular_of.insert(plur.clone(), sing.clone());
            self.nouns.insert(sing);
        }
        Ok(())
    }

    fn merge_verbs(&mut self, text: &str) -> Result<(), LexiconError> {
        for (line, l) in content_lines(text) {
            let cols: Vec<String> = l.split('\t').map(fold).collect();
            let [base, present_3s, past, past_participle] =
                <[String; 4]>::try_from(cols).map_err(|_| LexiconError::Parse {
                    file: "verbs.tsv".into(),
                    line,
                    message: "expected base<TAB>3s<TAB>past<TAB>past-participle".into(),
                })?;
            let idx = self.verbs.len();
            for form in [&base, &present_3s, &past, &past_participle] {
                self.verb_index.entry(form.clone()).or_insert(idx);
            }
            self.verbs.push(VerbEntry {
                base,
                present_3s,
                past,
                past_participle,
            });
        }
        Ok(())
    }

    pub fn add_noun(&mut self, noun: &str) {
        let folded = fold(noun);
        let words: Vec<String> = folded.split(' ').map(String::from).collect();
        if words.len() > 1 {
            self.max_multiword = self.max_multiword.max(words.len());
            self.multiword_nouns.insert(words);
        } else if !folded.is_empty() {
            self.nouns.insert(folded);
        }
    }

    pub fn add_similar(&mut self, word: &str, terms: &[&str]) {
        let line = format!("{word}\t{}", terms.join(","));
        self.merge_similar(&line).expect("single-word key");
    }

    /// Similar terms for `word` in file order; empty for unknown words.
    pub fn similar_terms(&self, word: &str) -> &[String] {
        self.similar
            .get(&fold(word))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Whether a single (case-folded) token is a known noun, directly or as
    /// the plural of one.
    pub fn is_noun(&self, folded: &str) -> bool {
        self.nouns.contains(folded)
            || self
                .singular_of
                .get(folded)
                .is_some_and(|s| self.nouns.contains(s))
    }

    pub fn is_adjective(&self, folded: &str) -> bool {
        self.adjectives.contains(folded)
    }

    pub fn is_determiner(&self, folded: &str) -> bool {
        self.determiners.contains(folded)
    }

    pub fn is_stopword(&self, folded: &str) -> bool {
        self.proper_stoplist.contains(folded)
    }

    /// Length of the longest multi-word noun starting at `folded[0]`.
    pub fn multiword_noun_len(&self, folded: &[&str]) -> Option<usize> {
        (2..=self.max_multiword.min(folded.len()))
            .rev()
            .find(|&len| {
                let key: Vec<String> = folded[..len].iter().map(|s| s.to_string()).collect();
                self.multiword_nouns.contains(&key)
            })
    }

    /// Plural of a noun phrase (its last word is inflected).
    pub fn pluralize(&self, phrase: &str) -> String {
        self.inflect_last(phrase, |w| {
            if let Some(p) = self.plural_of.get(w) {
                return Some(p.clone());
            }
            if self.singular_of.contains_key(w) {
                return Some(w.to_string());
            }
            suffix_plural(w)
        })
    }

    /// Singular of a noun phrase (its last word is inflected).
    pub fn singularize(&self, phrase: &str) -> String {
        self.inflect_last(phrase, |w| {
            if let Some(s) = self.singular_of.get(w) {
                return Some(s.clone());
            }
            if self.plural_of.contains_key(w) {
                return Some(w.to_string());
            }
            suffix_singular(w)
        })
    }

    /// Inflects a verb (any of its forms) to `form`. Falls back to regular
    /// suffix rules for verbs missing from the table.
    pub fn inflect_verb(&self, phrase: &str, form: VerbForm) -> String {
        self.inflect_last(phrase, |w| {
            if let Some(&idx) = self.verb_index.get(w) {
                let e = &self.verbs[idx];
                return Some(match form {
                    VerbForm::Present3s => e.present_3s.clone(),
                    VerbForm::Past => e.past.clone(),
                    VerbForm::PastParticiple => e.past_participle.clone(),
                });
            }
            suffix_verb(w, form)
        })
    }

    fn inflect_last(&self, phrase: &str, f: impl Fn(&str) -> Option<String>) -> String {
        let trimmed = phrase.trim();
        let (head, last) = match trimmed.rsplit_once(' ') {
            Some((h, l)) => (Some(h), l),
            None => (None, trimmed),
        };
        if !last.chars().any(char::is_alphabetic) {
            return trimmed.to_string();
        }
        let folded = last.to_lowercase();
        let inflected = match f(&folded) {
            Some(w) => match_case(last, &w),
            None => {
                warn!("no inflection known for {last:?}, keeping it unchanged");
                last.to_string()
            }
        };
        match head {
            Some(h) => format!("{h} {inflected}"),
            None => inflected,
        }
    }
}

fn match_case(original: &str, inflected: &str) -> String {
    let mut chars = original.chars();
    let first_upper = chars.next().is_some_and(char::is_uppercase);
    let all_upper = original
        .chars()
        .filter(|c| c.is_alphabetic())
        .all(char::is_uppercase)
        && original.chars().filter(|c| c.is_alphabetic()).count() > 1;
    if all_upper {
        inflected.to_uppercase()
    } else if first_upper {
        let mut c = inflected.chars();
        c.next()
            .map(|f| f.to_uppercase().chain(c).collect())
            .unwrap_or_default()
    } else {
        inflected.to_string()
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn suffix_plural(w: &str) -> Option<String> {
    let mut chars = w.chars().rev();
    let last = chars.next()?;
    let before = chars.next();
    if last == 'y' && before.is_some_and(|c| !is_vowel(c)) {
        return Some(format!("{}ies", &w[..w.len() - 1]));
    }
    if ["s", "x", "z", "ch", "sh"].iter().any(|s| w.ends_with(s)) {
        return Some(format!("{w}es"));
    }
    Some(format!("{w}s"))
}

fn suffix_singular(w: &str) -> Option<String> {
    if let Some(stem) = w.strip_suffix("ies") {
        if !stem.is_empty() {
            return Some(format!("{stem}y"));
        }
    }
    for s in ["ches", "shes", "xes", "sses", "zes"] {
        if w.ends_with(s) {
            return Some(w[..w.len() - 2].to_string());
        }
    }
    if w.ends_with('s') && !w.ends_with("ss") && w.len() > 1 {
        return Some(w[..w.len() - 1].to_string());
    }
    Some(w.to_string())
}

fn suffix_verb(w: &str, form: VerbForm) -> Option<String> {
    match form {
        VerbForm::Past | VerbForm::PastParticiple => {
            if w.ends_with("ed") {
                Some(w.to_string())
            } else if w.ends_with('e') {
                Some(format!("{w}d"))
            } else if let Some(stem) = w
                .strip_suffix('y')
                .filter(|s| s.chars().last().is_some_and(|c| !is_vowel(c)))
            {
                Some(format!("{stem}ied"))
            } else {
                Some(format!("{w}ed"))
            }
        }
        // the base of an unknown past form cannot be recovered reliably
        VerbForm::Present3s if w.ends_with("ed") => None,
        VerbForm::Present3s => suffix_plural(w),
    }
}
