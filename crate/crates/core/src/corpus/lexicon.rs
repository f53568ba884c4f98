use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{read_lines, tag_language, LanguageTag};
use crate::error::{Error, Result};

/// Source-token to target-phrase map. A source may have several
/// alternative translations; each translation is a non-empty phrase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranslationLexicon {
    pub direction: String,
    entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl TranslationLexicon {
    pub fn new(direction: impl Into<String>) -> Self {
        TranslationLexicon {
            direction: direction.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Adds an alternative translation for `source`.
    pub fn insert<S: AsRef<str>>(&mut self, source: &str, phrase: &[S]) -> Result<()> {
        if tag_language(source) != LanguageTag::LangA {
            return Err(Error::Data(format!(
                "lexicon source {source:?} is not a LangA token"
            )));
        }
        if phrase.is_empty() {
            return Err(Error::Data(format!("empty translation for {source:?}")));
        }
        let phrase: Vec<String> = phrase.iter().map(|s| s.as_ref().to_owned()).collect();
        if let Some(bad) = phrase
            .iter()
            .find(|w| w.is_empty() || w.chars().any(char::is_whitespace))
        {
            return Err(Error::Data(format!("malformed translation token {bad:?}")));
        }
        self.entries.entry(source.to_owned()).or_default().push(phrase);
        Ok(())
    }

    pub fn get(&self, source: &str) -> Option<&[Vec<String>]> {
        self.entries.get(source).map(Vec::as_slice)
    }

    pub fn contains(&self, source: &str) -> bool {
        self.entries.contains_key(source)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Vec<String>])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Parses `source<TAB>translation` lines; blank lines are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut lex = TranslationLexicon::new(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
        for (i, line) in read_lines(path)?.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (source, target) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected source<TAB>translation".into()))?;
            let phrase: Vec<&str> = target.split_whitespace().collect();
            lex.insert(source.trim(), &phrase)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (source, alts) in &self.entries {
            for phrase in alts {
                out.push_str(source);
                out.push('\t');
                out.push_str(&phrase.join(" "));
                out.push('\n');
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_accumulates_alternatives() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zh-en.tsv");
        fs::write(&path, "咖\tcoffee\n咖\tcafe latte\n\n好\tgood\n").unwrap();
        let lex = TranslationLexicon::load(&path).unwrap();
        assert_eq!(lex.direction, "zh-en");
        assert_eq!(lex.len(), 2);
        assert_eq!(
            lex.get("咖").unwrap(),
            &[vec!["coffee".to_string()], vec!["cafe".into(), "latte".into()]]
        );
        let again = dir.path().join("again.tsv");
        lex.save(&again).unwrap();
        assert_eq!(TranslationLexicon::load(&again).unwrap().get("咖"), lex.get("咖"));
    }

    #[test]
    fn rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        for (body, line) in [("好\tgood\nno tab\n", 2), ("好\t  \n", 1), ("good\tgood\n", 1)] {
            let path = dir.path().join("bad.tsv");
            fs::write(&path, body).unwrap();
            match TranslationLexicon::load(&path) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{body:?}"),
                other => panic!("{body:?}: {other:?}"),
            }
        }
    }
}
