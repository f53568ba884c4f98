//! Tokens, sentences, corpora, vocabularies and translation lexicons.
//!
//! Text is whitespace tokenized; every maximal run of CJK ideographs is
//! further split into one token per character. Each token is tagged with
//! the role of its language: [`LanguageTag::LangA`] for the CJK-script
//! matrix language, [`LanguageTag::LangB`] for the embedded Latin-script
//! language, and [`LanguageTag::NonVerbal`] for bracketed events such as
//! `(laugh)` or `[noise]`.

mod lexicon;
mod vocab;

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lexicon::TranslationLexicon;
pub use vocab::{build_vocab, Vocabulary, BOS, EOS, PAD, RESERVED, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LanguageTag {
    LangA,
    LangB,
    NonVerbal,
}

impl LanguageTag {
    pub fn is_verbal(self) -> bool {
        self != LanguageTag::NonVerbal
    }
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2FA1F)
}

fn is_bracketed(surface: &str) -> bool {
    let enclosed = |open: char, close: char| {
        surface.len() >= 2 && surface.starts_with(open) && surface.ends_with(close)
    };
    enclosed('(', ')') || enclosed('[', ']')
}

/// Language role of a token surface. A pure function of the string.
pub fn tag_language(surface: &str) -> LanguageTag {
    if is_bracketed(surface) {
        LanguageTag::NonVerbal
    } else if surface.chars().any(is_cjk) {
        LanguageTag::LangA
    } else {
        LanguageTag::LangB
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    surface: String,
    tag: LanguageTag,
}

impl Token {
    /// Builds a token, tagging it from its surface.
    ///
    /// Panics if `surface` is empty or contains whitespace.
    pub fn new(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        assert!(
            !surface.is_empty() && !surface.chars().any(char::is_whitespace),
            "token surface must be non-empty and whitespace-free: {surface:?}"
        );
        let tag = tag_language(&surface);
        Token { surface, tag }
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn tag(&self) -> LanguageTag {
        self.tag
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub id: Option<String>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens, id: None }
    }

    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S]) -> Self {
        Sentence::new(surfaces.iter().map(|s| Token::new(s.as_ref())).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(Token::surface)
    }

    pub fn count(&self, tag: LanguageTag) -> usize {
        self.tokens.iter().filter(|t| t.tag == tag).count()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tok) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&tok.surface)?;
        }
        Ok(())
    }
}

/// Splits a line on whitespace, then splits CJK runs into characters.
pub fn tokenize(line: &str) -> Sentence {
    let mut tokens = Vec::new();
    for word in line.split_whitespace() {
        if is_bracketed(word) {
            tokens.push(Token::new(word));
            continue;
        }
        let mut rest = String::new();
        for c in word.chars() {
            if is_cjk(c) {
                if !rest.is_empty() {
                    tokens.push(Token::new(std::mem::take(&mut rest)));
                }
                tokens.push(Token::new(c.to_string()));
            } else {
                rest.push(c);
            }
        }
        if !rest.is_empty() {
            tokens.push(Token::new(rest));
        }
    }
    Sentence::new(tokens)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Corpus {
            name: name.into(),
            sentences,
        }
    }

    pub fn from_lines<S: AsRef<str>>(name: impl Into<String>, lines: &[S]) -> Self {
        Corpus::new(name, lines.iter().map(|l| tokenize(l.as_ref())).collect())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Uniform draw with replacement.
    pub fn sample<'a>(&'a self, rng: &mut crate::rng::Rng, k: usize) -> Vec<&'a Sentence> {
        if self.sentences.is_empty() {
            return Vec::new();
        }
        (0..k)
            .map(|_| &self.sentences[rng.gen_range(0..self.sentences.len())])
            .collect()
    }

    /// Concatenation, keeping `self`'s name.
    pub fn concat(&self, other: &Corpus) -> Corpus {
        let mut sentences = self.sentences.clone();
        sentences.extend(other.sentences.iter().cloned());
        Corpus::new(self.name.clone(), sentences)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Sentence;
    type IntoIter = std::slice::Iter<'a, Sentence>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}

/// Reads `path` line by line, rejecting invalid UTF-8 with its line number.
pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for (i, raw) in bytes.split(|b| *b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| Error::InvalidUtf8 {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        lines.push(line.to_owned());
    }
    if bytes.ends_with(b"\n") {
        lines.pop();
    }
    Ok(lines)
}

/// One sentence per line. The corpus is named after the file stem.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Corpus::from_lines(name, &lines))
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, corpus.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use LanguageTag::*;

    fn tagged(s: &Sentence) -> Vec<(&str, LanguageTag)> {
        s.tokens.iter().map(|t| (t.surface(), t.tag())).collect()
    }

    #[test]
    fn tokenize_mixed_line() {
        let s = tokenize("我 like 咖啡");
        assert_eq!(
            tagged(&s),
            vec![("我", LangA), ("like", LangB), ("咖", LangA), ("啡", LangA)]
        );
    }

    #[test]
    fn tokenize_edge_cases() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t ").is_empty());
        assert_eq!(
            tagged(&tokenize("hello world")),
            vec![("hello", LangB), ("world", LangB)]
        );
        // CJK glued to Latin splits at the script boundary.
        assert_eq!(
            tagged(&tokenize("我like你")),
            vec![("我", LangA), ("like", LangB), ("你", LangA)]
        );
        assert_eq!(
            tagged(&tokenize("(笑) ok")),
            vec![("(笑)", NonVerbal), ("ok", LangB)]
        );
    }

    #[test]
    fn tag_rules() {
        assert_eq!(tag_language("(laugh)"), NonVerbal);
        assert_eq!(tag_language("[noise]"), NonVerbal);
        assert_eq!(tag_language("好"), LangA);
        assert_eq!(tag_language("then"), LangB);
        assert_eq!(tag_language("2016"), LangB);
        assert_eq!(tag_language("("), LangB);
    }

    #[test]
    fn corpus_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        let corpus = Corpus::from_lines("c", &["我 like 咖 啡", "", "(laugh) ok"]);
        save_corpus(&corpus, &path).unwrap();
        let back = load_corpus(&path).unwrap();
        assert_eq!(back.sentences, corpus.sentences);
        assert_eq!(back.name, "c");
    }

    #[test]
    fn invalid_utf8_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, b"ok\n\xff\xfe\n").unwrap();
        match load_corpus(&path) {
            Err(Error::InvalidUtf8 { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected utf-8 error, got {other:?}"),
        }
        assert!(matches!(
            load_corpus(dir.path().join("missing.txt")),
            Err(Error::Io { .. })
        ));
    }

    fn normalized_line() -> impl Strategy<Value = String> {
        let word = prop_oneof![
            "[a-z]{1,6}",
            "[\u{4e00}-\u{4e50}]",
            "\\((laugh|cough)\\)",
        ];
        prop::collection::vec(word, 0..10).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn normalized_lines_round_trip(line in normalized_line()) {
            let s = tokenize(&line);
            prop_assert_eq!(s.to_string(), line.clone());
            // Tagging is a pure function of the surface.
            for t in &s.tokens {
                prop_assert_eq!(t.tag(), tag_language(t.surface()));
            }
        }
    }
}
