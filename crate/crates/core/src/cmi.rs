//! Code-Mixing Index at the utterance level.
//!
//! For an utterance with `n` tokens, `u` of them non-verbal, and `d` tokens
//! in the dominant language,
//!
//! ```text
//! CMI = 100 * (1 - d / (n - u))   if n > u
//!     = 0                         if n = u
//! ```
//!
//! The value lies in `[0, 50]` for two languages. Utterances are grouped by
//! dominant language and by five CMI buckets: `C1 = 0`, `C2 = (0,15]`,
//! `C3 = (15,30]`, `C4 = (30,45]`, `C5 = (45,50]`.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LanguageTag, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmiScore {
    pub value: f64,
    pub n: usize,
    pub u: usize,
    pub dominant_count: usize,
}

impl CmiScore {
    /// Evaluates the index from raw counts.
    ///
    /// Computed as `100 * (m - d) / m` with `m = n - u`, which is the
    /// correctly rounded value of the exact ratio. Bucket boundaries such as
    /// 15 or 30 therefore land exactly where the ratio says they should.
    pub fn from_counts(n: usize, u: usize, dominant_count: usize) -> Self {
        assert!(u <= n && dominant_count <= n - u, "inconsistent CMI counts");
        let verbal = n - u;
        let value = if verbal == 0 {
            0.0
        } else {
            (100 * (verbal - dominant_count)) as f64 / verbal as f64
        };
        CmiScore {
            value,
            n,
            u,
            dominant_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    C1,
    C2,
    C3,
    C4,
    C5,
}

impl Bucket {
    pub const ALL: [Bucket; 5] = [Bucket::C1, Bucket::C2, Bucket::C3, Bucket::C4, Bucket::C5];

    /// Left-open, right-closed buckets over `[0, 50]`. Values outside the
    /// range have no bucket.
    pub fn of(value: f64) -> Option<Bucket> {
        match value {
            0.0 => Some(Bucket::C1),
            v if v > 0.0 && v <= 15.0 => Some(Bucket::C2),
            v if v > 15.0 && v <= 30.0 => Some(Bucket::C3),
            v if v > 30.0 && v <= 45.0 => Some(Bucket::C4),
            v if v > 45.0 && v <= 50.0 => Some(Bucket::C5),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn range_label(self) -> &'static str {
        match self {
            Bucket::C1 => "0",
            Bucket::C2 => "(0,15]",
            Bucket::C3 => "(15,30]",
            Bucket::C4 => "(30,45]",
            Bucket::C5 => "(45,50]",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CmiGroup {
    pub dominant: LanguageTag,
    pub bucket: Bucket,
}

impl fmt::Display for CmiGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lang = match self.dominant {
            LanguageTag::LangA => "ZH",
            LanguageTag::LangB => "EN",
            LanguageTag::NonVerbal => "NV",
        };
        write!(f, "{lang}-{:?}", self.bucket)
    }
}

pub fn cmi(sentence: &Sentence) -> CmiScore {
    let a = sentence.count(LanguageTag::LangA);
    let b = sentence.count(LanguageTag::LangB);
    let u = sentence.count(LanguageTag::NonVerbal);
    CmiScore::from_counts(a + b + u, u, a.max(b))
}

/// Dominant language and CMI bucket; `None` when the sentence has no verbal
/// token. Equal counts go to the language of the first verbal token.
pub fn group(sentence: &Sentence) -> Option<CmiGroup> {
    let a = sentence.count(LanguageTag::LangA);
    let b = sentence.count(LanguageTag::LangB);
    let dominant = match a.cmp(&b) {
        std::cmp::Ordering::Greater => LanguageTag::LangA,
        std::cmp::Ordering::Less => LanguageTag::LangB,
        std::cmp::Ordering::Equal => sentence
            .tokens
            .iter()
            .map(|t| t.tag())
            .find(|t| t.is_verbal())?,
    };
    let bucket = Bucket::of(cmi(sentence).value).expect("CMI of two languages lies in [0, 50]");
    Some(CmiGroup { dominant, bucket })
}

pub const BIN_COUNT: usize = 11;
const EMPTY_BIN: usize = 10;

/// Fraction of sentences in each of the ten groups plus an `EMPTY` bin for
/// sentences without verbal tokens. Bin order: ZH-C1..C5, EN-C1..C5, EMPTY.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CmiHistogram {
    pub mass: [f64; BIN_COUNT],
    pub sentences: usize,
}

impl CmiHistogram {
    pub fn bin_labels() -> [String; BIN_COUNT] {
        let mut labels: [String; BIN_COUNT] = Default::default();
        for (dom, lang) in [(0usize, "ZH"), (1, "EN")] {
            for b in Bucket::ALL {
                labels[dom * 5 + b.index()] = format!("{lang}-{b:?}");
            }
        }
        labels[EMPTY_BIN] = "EMPTY".into();
        labels
    }

    pub fn bin_of(group: Option<CmiGroup>) -> usize {
        match group {
            None => EMPTY_BIN,
            Some(g) => {
                let dom = usize::from(g.dominant == LanguageTag::LangB);
                dom * 5 + g.bucket.index()
            }
        }
    }

    pub fn get(&self, group: Option<CmiGroup>) -> f64 {
        self.mass[Self::bin_of(group)]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Aligned plain-text table with percentages at two decimals.
    pub fn to_table(&self, title: &str) -> String {
        let ranges = ["0", "(0,15]", "(15,30]", "(30,45]", "(45,50]"];
        let mut out = format!("{:<8} {:>8} {:>9}\n", "group", "CMI", title);
        for (i, label) in Self::bin_labels().iter().enumerate() {
            let range = if i == EMPTY_BIN { "-" } else { ranges[i % 5] };
            let _ = writeln!(out, "{:<8} {:>8} {:>9.2}", label, range, 100.0 * self.mass[i]);
        }
        out
    }

    /// JSON object with bins in fixed order and percentages rounded to two
    /// decimals.
    pub fn to_json(&self) -> serde_json::Value {
        let mut bins = serde_json::Map::new();
        for (label, m) in Self::bin_labels().iter().zip(self.mass) {
            bins.insert(label.clone(), serde_json::json!(round2(100.0 * m)));
        }
        serde_json::json!({ "sentences": self.sentences, "percent": bins })
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn histogram(corpus: &Corpus) -> CmiHistogram {
    let mut counts = [0usize; BIN_COUNT];
    for s in corpus {
        counts[CmiHistogram::bin_of(group(s))] += 1;
    }
    let total = corpus.len();
    let mut mass = [0.0; BIN_COUNT];
    if total > 0 {
        for (m, c) in mass.iter_mut().zip(counts) {
            *m = c as f64 / total as f64;
        }
    }
    CmiHistogram {
        mass,
        sentences: total,
    }
}

/// Total variation distance, `0.5 * sum |a_i - b_i|` over all eleven bins.
pub fn histogram_distance(a: &CmiHistogram, b: &CmiHistogram) -> f64 {
    0.5 * a
        .mass
        .iter()
        .zip(&b.mass)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn s(line: &str) -> Sentence {
        tokenize(line)
    }

    #[test]
    fn index_values() {
        assert_eq!(cmi(&s("一 二 三 四 五")).value, 0.0);
        assert_eq!(cmi(&s("(laugh) [noise]")).value, 0.0);
        assert_eq!(cmi(&s("")).value, 0.0);
        let mixed = cmi(&s("一 二 三 ok"));
        assert_eq!(mixed.value, 25.0);
        assert_eq!((mixed.n, mixed.u, mixed.dominant_count), (4, 0, 3));
        // Non-verbal tokens leave the ratio alone.
        assert_eq!(cmi(&s("一 (laugh) 二 三 ok")).value, 25.0);
    }

    #[test]
    fn groups() {
        // 9 EN + 1 ZH: CMI 10, English dominant.
        let en = s("a b c d e f g h i 一");
        assert_eq!(cmi(&en).value, 10.0);
        assert_eq!(
            group(&en),
            Some(CmiGroup { dominant: LanguageTag::LangB, bucket: Bucket::C2 })
        );
        assert_eq!(
            group(&s("一 二")),
            Some(CmiGroup { dominant: LanguageTag::LangA, bucket: Bucket::C1 })
        );
        let tie = s("一 a 二 b");
        assert_eq!(cmi(&tie).value, 50.0);
        assert_eq!(
            group(&tie),
            Some(CmiGroup { dominant: LanguageTag::LangA, bucket: Bucket::C5 })
        );
        assert_eq!(group(&s("(laugh) a 一")).unwrap().dominant, LanguageTag::LangB);
        assert_eq!(group(&s("(laugh)")), None);
        assert_eq!(group(&s("")), None);
    }

    #[test]
    fn bucket_boundaries() {
        let eps = 1e-9;
        assert_eq!(Bucket::of(0.0), Some(Bucket::C1));
        assert_eq!(Bucket::of(eps), Some(Bucket::C2));
        assert_eq!(Bucket::of(15.0), Some(Bucket::C2));
        assert_eq!(Bucket::of(15.0 + eps), Some(Bucket::C3));
        assert_eq!(Bucket::of(30.0), Some(Bucket::C3));
        assert_eq!(Bucket::of(45.0), Some(Bucket::C4));
        assert_eq!(Bucket::of(45.0 + eps), Some(Bucket::C5));
        assert_eq!(Bucket::of(50.0), Some(Bucket::C5));
        assert_eq!(Bucket::of(50.0 + eps), None);
        assert_eq!(Bucket::of(-eps), None);
        // 17 of 20 dominant is exactly 15, not a hair above.
        assert_eq!(CmiScore::from_counts(20, 0, 17).value, 15.0);
    }

    #[test]
    fn histograms() {
        let mono = Corpus::from_lines("m", &["一 二 三"]);
        let h = histogram(&mono);
        assert_eq!(h.get(Some(CmiGroup { dominant: LanguageTag::LangA, bucket: Bucket::C1 })), 1.0);
        assert_eq!(histogram(&Corpus::default()).mass, [0.0; BIN_COUNT]);

        // Two at 10 (C2), two at 20 (C3), Chinese dominant.
        let c = Corpus::from_lines(
            "c",
            &[
                "一 二 三 四 五 六 七 八 九 a",
                "一 二 三 四 五 六 七 八 九 b",
                "一 二 三 四 a",
                "一 二 三 四 b",
            ],
        );
        let h = histogram(&c);
        assert_eq!(h.mass[1], 0.5);
        assert_eq!(h.mass[2], 0.5);
        assert_eq!(h.total(), 1.0);
    }

    #[test]
    fn distances() {
        let mut a = CmiHistogram::default();
        a.mass[1] = 1.0;
        let mut b = CmiHistogram::default();
        b.mass[1] = 0.5;
        b.mass[2] = 0.5;
        let mut c = CmiHistogram::default();
        c.mass[7] = 1.0;
        assert_eq!(histogram_distance(&a, &a), 0.0);
        assert_eq!(histogram_distance(&a, &c), 1.0);
        assert_eq!(histogram_distance(&a, &b), 0.5);
    }

    #[test]
    fn report_formats() {
        let c = Corpus::from_lines("c", &["一 二 a", "(laugh)", "a b"]);
        let h = histogram(&c);
        let table = h.to_table("c");
        assert_eq!(table.lines().count(), 12);
        assert!(table.contains("EMPTY"));
        let json = h.to_json();
        assert_eq!(json["percent"]["EMPTY"], 33.33);
        assert_eq!(json["percent"]["EN-C1"], 33.33);
    }

    proptest! {
        #[test]
        fn range_and_normalization(
            lines in prop::collection::vec(
                prop::collection::vec(prop_oneof!["[a-c]", "[一二三]", Just("(x)".to_string())], 0..12),
                1..20)
        ) {
            let corpus = Corpus::new(
                "p",
                lines.iter().map(|l| Sentence::from_surfaces(l)).collect(),
            );
            for sentence in &corpus {
                let v = cmi(sentence).value;
                prop_assert!((0.0..=50.0).contains(&v));
                if v == 50.0 {
                    prop_assert_eq!(
                        sentence.count(LanguageTag::LangA),
                        sentence.count(LanguageTag::LangB)
                    );
                }
            }
            prop_assert!((histogram(&corpus).total() - 1.0).abs() < 1e-12);
        }
    }
}
