//! Pseudo-parallel pair synthesis by lexicon substitution, and toy
//! bilingual corpora for desk-scale experiments.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LanguageTag, Sentence, Token, TranslationLexicon};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionPolicy {
    /// Probability that a substitutable token is replaced.
    pub rate: f64,
    /// Translations longer than this are never chosen.
    pub max_phrase_len: usize,
    pub seed: u64,
}

impl Default for SubstitutionPolicy {
    fn default() -> Self {
        SubstitutionPolicy {
            rate: 0.35,
            max_phrase_len: 4,
            seed: 0,
        }
    }
}

impl SubstitutionPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::Config(format!("rate {} outside [0, 1]", self.rate)));
        }
        if self.max_phrase_len == 0 {
            return Err(Error::Config("max_phrase_len must be at least 1".into()));
        }
        Ok(())
    }

    /// Random stream for the sentence at `index` of a corpus.
    pub fn stream(&self, index: u64) -> Rng {
        rng::substream_indexed(self.seed, "substitute", index)
    }
}

/// Replaces lexicon tokens with one of their translations.
///
/// Every LangA token found in the lexicon consumes one uniform draw; if the
/// draw is below `rate`, a second draw picks the translation among the
/// eligible alternatives. Other tokens pass through untouched and consume
/// nothing.
pub fn substitute_with(
    sentence: &Sentence,
    lexicon: &TranslationLexicon,
    policy: &SubstitutionPolicy,
    rng: &mut Rng,
) -> Sentence {
    let mut out = Vec::with_capacity(sentence.len());
    for token in &sentence.tokens {
        let alternatives: Vec<&Vec<String>> = match lexicon.get(token.surface()) {
            Some(alts) if token.tag() == LanguageTag::LangA => alts
                .iter()
                .filter(|p| p.len() <= policy.max_phrase_len)
                .collect(),
            _ => Vec::new(),
        };
        if alternatives.is_empty() {
            out.push(token.clone());
            continue;
        }
        let draw: f64 = rng.gen();
        if draw < policy.rate {
            let pick = alternatives[rng.gen_range(0..alternatives.len())];
            out.extend(pick.iter().map(Token::new));
        } else {
            out.push(token.clone());
        }
    }
    Sentence {
        tokens: out,
        id: sentence.id.clone(),
    }
}

/// [`substitute_with`] on the policy's stream for sentence index 0.
pub fn substitute(
    sentence: &Sentence,
    lexicon: &TranslationLexicon,
    policy: &SubstitutionPolicy,
) -> Sentence {
    substitute_with(sentence, lexicon, policy, &mut policy.stream(0))
}

/// `(original, substituted)` for every sentence. Sentence `i` uses stream
/// `i`, so the result does not depend on how the work is scheduled.
pub fn make_pairs(
    corpus: &Corpus,
    lexicon: &TranslationLexicon,
    policy: &SubstitutionPolicy,
) -> Result<Vec<(Sentence, Sentence)>> {
    policy.validate()?;
    Ok(corpus
        .sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let t = substitute_with(s, lexicon, policy, &mut policy.stream(i as u64));
            (s.clone(), t)
        })
        .collect())
}

/// Tab-separated pair file, one `source<TAB>target` per line.
pub fn pairs_to_text(pairs: &[(Sentence, Sentence)]) -> String {
    pairs
        .iter()
        .map(|(s, t)| format!("{s}\t{t}\n"))
        .collect()
}

pub fn load_pairs(path: impl AsRef<std::path::Path>) -> Result<Vec<(Sentence, Sentence)>> {
    let path = path.as_ref();
    let mut pairs = Vec::new();
    for (i, line) in crate::corpus::read_lines(path)?.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (s, t) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected source<TAB>target".into(),
        })?;
        pairs.push((crate::corpus::tokenize(s), crate::corpus::tokenize(t)));
    }
    Ok(pairs)
}

/// Parameters of a synthetic language pair.
///
/// LangA words are single characters from the CJK ideograph block; LangB
/// words are short Latin syllable strings. Sentences are walks of a sparse
/// random Markov chain over LangA words, so the toy language has structure a
/// language model can learn. The CS corpus is built from independent walks
/// by substitution with a per-sentence rate drawn from `cs_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub vocab_a_size: usize,
    pub vocab_b_size: usize,
    pub sentence_len: (usize, usize),
    /// Size of the monolingual LangA corpus.
    pub corpus_size: usize,
    /// Size of the code-switched corpus.
    pub cs_size: usize,
    /// Successors per word in the Markov chain.
    pub branching: usize,
    pub cs_rate: (f64, f64),
    pub seed: u64,
}

impl Default for ToySpec {
    fn default() -> Self {
        ToySpec {
            vocab_a_size: 60,
            vocab_b_size: 60,
            sentence_len: (4, 8),
            corpus_size: 1000,
            cs_size: 1000,
            branching: 3,
            cs_rate: (0.15, 0.35),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToyData {
    pub mono: Corpus,
    pub cs: Corpus,
    pub lexicon: TranslationLexicon,
}

pub fn toy_word_a(i: usize) -> String {
    char::from_u32(0x4E00 + i as u32).unwrap().to_string()
}

pub fn toy_word_b(i: usize) -> String {
    const ONSETS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let syllable = |k: usize| {
        let k = k % (ONSETS.len() * VOWELS.len());
        format!(
            "{}{}",
            ONSETS[k / VOWELS.len()] as char,
            VOWELS[k % VOWELS.len()] as char
        )
    };
    let base = ONSETS.len() * VOWELS.len();
    format!("{}{}", syllable(i / base + i), syllable(i))
}

struct Chain {
    successors: Vec<Vec<(usize, f64)>>,
}

impl Chain {
    fn new(size: usize, branching: usize, rng: &mut Rng) -> Self {
        let all: Vec<usize> = (0..size).collect();
        let successors = (0..size)
            .map(|_| {
                let picks: Vec<usize> = all
                    .choose_multiple(rng, branching.min(size))
                    .copied()
                    .collect();
                let weights: Vec<f64> = picks.iter().map(|_| rng.gen_range(0.2..1.0)).collect();
                let total: f64 = weights.iter().sum();
                picks
                    .into_iter()
                    .zip(weights)
                    .map(|(p, w)| (p, w / total))
                    .collect()
            })
            .collect();
        Chain { successors }
    }

    fn walk(&self, len: usize, rng: &mut Rng) -> Vec<usize> {
        let mut cur = rng.gen_range(0..self.successors.len());
        let mut out = vec![cur];
        while out.len() < len {
            let draw: f64 = rng.gen();
            let mut acc = 0.0;
            let succ = &self.successors[cur];
            cur = succ.last().unwrap().0;
            for &(next, p) in succ {
                acc += p;
                if draw < acc {
                    cur = next;
                    break;
                }
            }
            out.push(cur);
        }
        out
    }
}

pub fn generate_toy(spec: &ToySpec) -> Result<ToyData> {
    let (lo, hi) = spec.sentence_len;
    if spec.vocab_a_size == 0 || spec.vocab_a_size > 20_000 {
        return Err(Error::Config("vocab_a_size must be in 1..=20000".into()));
    }
    if spec.vocab_b_size != spec.vocab_a_size {
        return Err(Error::Config(
            "toy lexicon is a bijection: vocab_b_size must equal vocab_a_size".into(),
        ));
    }
    if lo == 0 || lo > hi {
        return Err(Error::Config(format!("bad sentence_len range {lo}..={hi}")));
    }
    if spec.corpus_size == 0 || spec.cs_size == 0 || spec.branching == 0 {
        return Err(Error::Config("corpus sizes and branching must be at least 1".into()));
    }
    let (rlo, rhi) = spec.cs_rate;
    if !(0.0..=1.0).contains(&rlo) || !(0.0..=1.0).contains(&rhi) || rlo > rhi {
        return Err(Error::Config(format!("bad cs_rate range {rlo}..{rhi}")));
    }

    let mut lex_rng = rng::substream(spec.seed, "toy:lexicon");
    let mut targets: Vec<usize> = (0..spec.vocab_b_size).collect();
    targets.shuffle(&mut lex_rng);
    let mut lexicon = TranslationLexicon::new("toy-a-b");
    for (a, &b) in targets.iter().enumerate().take(spec.vocab_a_size) {
        lexicon.insert(&toy_word_a(a), &[toy_word_b(b)])?;
    }

    let chain = Chain::new(spec.vocab_a_size, spec.branching, &mut rng::substream(spec.seed, "toy:chain"));
    let walk_corpus = |name: &str, size: usize| {
        let mut r = rng::substream(spec.seed, name);
        let sentences = (0..size)
            .map(|_| {
                let len = r.gen_range(lo..=hi);
                Sentence::from_surfaces(
                    &chain.walk(len, &mut r).into_iter().map(toy_word_a).collect::<Vec<_>>(),
                )
            })
            .collect();
        Corpus::new(name.trim_start_matches("toy:"), sentences)
    };

    let mono = walk_corpus("toy:mono", spec.corpus_size);
    let source = walk_corpus("toy:cs-source", spec.cs_size);
    let mut rates = rng::substream(spec.seed, "toy:cs-rate");
    let cs_sentences = source
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let policy = SubstitutionPolicy {
                rate: rates.gen_range(rlo..=rhi),
                max_phrase_len: 1,
                seed: rng::derive_seed(spec.seed, "toy:cs-substitute"),
            };
            substitute_with(s, &lexicon, &policy, &mut policy.stream(i as u64))
        })
        .collect();
    Ok(ToyData {
        mono,
        cs: Corpus::new("cs", cs_sentences),
        lexicon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmi;
    use crate::corpus::tokenize;

    fn lexicon() -> TranslationLexicon {
        let mut lex = TranslationLexicon::new("t");
        for (a, b) in [("一", "one"), ("二", "two"), ("三", "three"), ("四", "four")] {
            lex.insert(a, &[b]).unwrap();
        }
        lex
    }

    fn policy(rate: f64, seed: u64) -> SubstitutionPolicy {
        SubstitutionPolicy { rate, max_phrase_len: 4, seed }
    }

    #[test]
    fn rate_extremes() {
        let s = tokenize("一 二 (laugh) 三 四 五");
        assert_eq!(substitute(&s, &lexicon(), &policy(0.0, 3)), s);
        let full = substitute(&s, &lexicon(), &policy(1.0, 3));
        assert_eq!(full.to_string(), "one two (laugh) three four 五");
        let all_known = tokenize("一 二 三 四");
        let out = substitute(&all_known, &lexicon(), &policy(1.0, 9));
        assert_eq!(cmi::cmi(&out).value, 0.0);
        assert_eq!(out.count(LanguageTag::LangA), 0);
    }

    #[test]
    fn seeded_golden_and_replay() {
        let s = tokenize("一 二 三 四");
        let p = policy(0.5, 7);
        let out = substitute(&s, &lexicon(), &p);

        // Replay the draws by hand: one uniform per token, one index draw
        // (over a single alternative) after each replacement.
        let mut r = p.stream(0);
        let english = ["one", "two", "three", "four"];
        let mut expected = Vec::new();
        for (zh, en) in ["一", "二", "三", "四"].iter().zip(english) {
            let u: f64 = r.gen();
            if u < 0.5 {
                let _: usize = r.gen_range(0..1);
                expected.push(en);
            } else {
                expected.push(zh);
            }
        }
        assert_eq!(out.to_string(), expected.join(" "));
        // Frozen outcome of the first correct run.
        assert_eq!(out.to_string(), GOLDEN_SEED7);
    }

    const GOLDEN_SEED7: &str = "one two 三 four";

    #[test]
    fn phrases_lengthen_and_respect_max_len() {
        let mut lex = TranslationLexicon::new("t");
        lex.insert("铁", &["rail", "way"]).unwrap();
        let s = tokenize("铁 路");
        let out = substitute(&s, &lex, &policy(1.0, 0));
        assert_eq!(out.to_string(), "rail way 路");
        let short = SubstitutionPolicy { max_phrase_len: 1, ..policy(1.0, 0) };
        assert_eq!(substitute(&s, &lex, &short), s);
    }

    #[test]
    fn pairs() {
        let lex = lexicon();
        assert!(make_pairs(&Corpus::default(), &lex, &policy(0.3, 1)).unwrap().is_empty());
        let c = Corpus::from_lines("c", &["一 二", "三 四 五"]);
        for (s, t) in make_pairs(&c, &lex, &policy(0.0, 1)).unwrap() {
            assert_eq!(s, t);
        }
        assert!(make_pairs(&c, &lex, &policy(1.5, 1)).is_err());
        let a = make_pairs(&c, &lex, &policy(0.5, 11)).unwrap();
        assert_eq!(a, make_pairs(&c, &lex, &policy(0.5, 11)).unwrap());
    }

    #[test]
    fn replacement_fraction_tracks_rate() {
        let spec = ToySpec { corpus_size: 2500, ..ToySpec::default() };
        let toy = generate_toy(&spec).unwrap();
        let pairs = make_pairs(&toy.mono, &toy.lexicon, &policy(0.4, 5)).unwrap();
        let (mut replaced, mut total) = (0usize, 0usize);
        for (s, t) in &pairs {
            assert_eq!(s.len(), t.len());
            total += s.len();
            replaced += t.count(LanguageTag::LangB);
        }
        assert!(total >= 10_000);
        let frac = replaced as f64 / total as f64;
        assert!((frac - 0.4).abs() < 0.05, "{frac}");
    }

    #[test]
    fn conservation() {
        let toy = generate_toy(&ToySpec { corpus_size: 200, ..ToySpec::default() }).unwrap();
        let pairs = make_pairs(&toy.mono, &toy.lexicon, &policy(0.5, 2)).unwrap();
        for (s, t) in pairs {
            // Single-token lexicon: slot count preserved, kept tokens in place.
            assert_eq!(s.len(), t.len());
            for (a, b) in s.tokens.iter().zip(&t.tokens) {
                if b.tag() == LanguageTag::LangA {
                    assert_eq!(a, b);
                } else {
                    assert_eq!(toy.lexicon.get(a.surface()).unwrap()[0][0], b.surface());
                }
            }
        }
    }

    #[test]
    fn expected_mixing_grows_with_rate() {
        let toy = generate_toy(&ToySpec { corpus_size: 10_000, ..ToySpec::default() }).unwrap();
        let mut last = -1.0;
        for rate in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let pairs = make_pairs(&toy.mono, &toy.lexicon, &policy(rate, 4)).unwrap();
            let dominant_fraction: f64 = pairs
                .iter()
                .map(|(_, t)| {
                    let c = cmi::cmi(t);
                    c.dominant_count as f64 / (c.n - c.u) as f64
                })
                .sum::<f64>()
                / pairs.len() as f64;
            let mean_cmi = 100.0 * (1.0 - dominant_fraction);
            assert!(mean_cmi > last, "rate {rate}: {mean_cmi} <= {last}");
            last = mean_cmi;
        }
    }

    #[test]
    fn toy_data_shape() {
        let spec = ToySpec { corpus_size: 300, cs_size: 400, ..ToySpec::default() };
        let toy = generate_toy(&spec).unwrap();
        assert_eq!(toy.mono.len(), 300);
        assert_eq!(toy.cs.len(), 400);
        assert_eq!(toy.lexicon.len(), 60);
        // Bijective: 60 distinct targets.
        let mut targets: Vec<&str> = toy.lexicon.iter().map(|(_, a)| a[0][0].as_str()).collect();
        targets.sort();
        targets.dedup();
        assert_eq!(targets.len(), 60);
        for s in &toy.mono {
            assert!((4..=8).contains(&s.len()));
            assert_eq!(s.count(LanguageTag::LangA), s.len());
        }
        // CS profile sits around C3.
        let h = cmi::histogram(&toy.cs);
        assert!(h.mass[2] > h.mass[0] && h.mass[2] > h.mass[4], "{:?}", h.mass);
        let again = generate_toy(&spec).unwrap();
        assert_eq!(again.mono, toy.mono);
        assert_eq!(again.cs, toy.cs);
        assert!(generate_toy(&ToySpec { vocab_b_size: 10, ..spec.clone() }).is_err());
        assert!(generate_toy(&ToySpec { sentence_len: (5, 2), ..spec }).is_err());
    }

    #[test]
    fn toy_words_are_distinct_and_tagged() {
        let mut words: Vec<String> = (0..500).map(toy_word_b).collect();
        assert!(words.iter().all(|w| crate::corpus::tag_language(w) == LanguageTag::LangB));
        words.sort();
        words.dedup();
        assert_eq!(words.len(), 500);
        assert_eq!(crate::corpus::tag_language(&toy_word_a(59)), LanguageTag::LangA);
    }
}
