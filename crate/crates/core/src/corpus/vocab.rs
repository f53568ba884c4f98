use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Corpus, Sentence, Token};
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const RESERVED: usize = 4;

const SPECIALS: [&str; RESERVED] = ["<pad>", "<s>", "</s>", "<unk>"];

/// Bijective token/id map. Ids below [`RESERVED`] are special symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .skip(RESERVED)
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Vocabulary over `words` in the given order, after the specials.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        for w in words {
            let w = w.as_ref();
            if !tokens[RESERVED..].iter().any(|t| t == w) {
                tokens.push(w.to_owned());
            }
        }
        Vocabulary::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, surface: &str) -> usize {
        self.index.get(surface).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.index.contains_key(surface)
    }

    pub fn token(&self, id: usize) -> Result<&str> {
        self.tokens
            .get(id)
            .map(String::as_str)
            .ok_or(Error::IdOutOfRange {
                id,
                size: self.len(),
            })
    }

    /// Non-reserved tokens in id order.
    pub fn words(&self) -> &[String] {
        &self.tokens[RESERVED..]
    }

    pub fn encode(&self, sentence: &Sentence, frame: bool) -> Vec<usize> {
        let mut ids = Vec::with_capacity(sentence.len() + 2);
        if frame {
            ids.push(BOS);
        }
        ids.extend(sentence.surfaces().map(|s| self.id(s)));
        if frame {
            ids.push(EOS);
        }
        ids
    }

    /// Inverse of [`encode`](Self::encode): skips a leading BOS and PAD,
    /// stops at the first EOS.
    pub fn decode(&self, ids: &[usize]) -> Result<Sentence> {
        let mut tokens = Vec::with_capacity(ids.len());
        for (pos, &id) in ids.iter().enumerate() {
            let surface = self.token(id)?;
            match id {
                PAD => continue,
                BOS if pos == 0 => continue,
                EOS => break,
                _ => tokens.push(Token::new(surface)),
            }
        }
        Ok(Sentence::new(tokens))
    }
}

/// Tokens with frequency at least `min_count`, by descending frequency and
/// then lexicographically.
pub fn build_vocab(corpora: &[&Corpus], min_count: usize) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for corpus in corpora {
        for sentence in corpus.iter() {
            for s in sentence.surfaces() {
                *counts.entry(s).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(s, c)| *c >= min_count && !SPECIALS.contains(s))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let words: Vec<&str> = ranked.into_iter().map(|(s, _)| s).collect();
    Ok(Vocabulary::from_words(&words))
}

impl Vocabulary {
    pub fn build(corpora: &[&Corpus], min_count: usize) -> Result<Self> {
        build_vocab(corpora, min_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn counts_and_threshold() {
        let c = Corpus::from_lines("c", &["a a b"]);
        let v = build_vocab(&[&c], 1).unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(v.words(), ["a", "b"]);
        assert_eq!(v.encode(&tokenize("a b"), false), vec![4, 5]);
        assert_eq!(v.encode(&tokenize("a b"), true), vec![BOS, 4, 5, EOS]);

        let v2 = build_vocab(&[&c], 2).unwrap();
        assert_eq!(v2.id("b"), UNK);
        assert_eq!(v2.encode(&tokenize("b zz"), false), vec![UNK, UNK]);
        assert!(build_vocab(&[&c], 0).is_err());
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = Corpus::from_lines("c", &["z y x y z"]);
        let v = build_vocab(&[&c], 1).unwrap();
        assert_eq!(v.words(), ["y", "z", "x"]);
        // Identical input, identical ids.
        assert_eq!(v, build_vocab(&[&c], 1).unwrap());
    }

    #[test]
    fn decode_round_trip_and_bounds() {
        let c = Corpus::from_lines("c", &["我 like 咖 啡 (laugh)"]);
        let v = build_vocab(&[&c], 1).unwrap();
        let s = &c.sentences[0];
        assert_eq!(&v.decode(&v.encode(s, false)).unwrap(), s);
        assert_eq!(&v.decode(&v.encode(s, true)).unwrap(), s);
        let small = Vocabulary::from_words(&["a", "b", "c", "d", "e", "f"]);
        assert_eq!(small.len(), 10);
        assert!(matches!(
            small.decode(&[1_000_000_000]),
            Err(Error::IdOutOfRange { size: 10, .. })
        ));
    }

    #[test]
    fn serde_keeps_ids() {
        let v = Vocabulary::from_words(&["a", "好"]);
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.id("好"), 5);
    }
}
