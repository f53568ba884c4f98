//! Builds synthetic (monolingual, code-switched) training pairs by lexicon
//! substitution.
use codeswitch::corpus::{Corpus, TranslationLexicon};
use codeswitch::synth::{make_pairs, pairs_to_text, SubstitutionPolicy};

fn main() -> codeswitch::Result<()> {
    let mut lexicon = TranslationLexicon::new("zh-en");
    // Chinese text is split per character, so entries are keyed by character.
    lexicon.insert("书", &["book"])?;
    lexicon.insert("茶", &["tea"])?;
    lexicon.insert("猫", &["the", "cat"])?;
    let mono = Corpus::from_lines("mono", &["我 有 书", "他 喝 茶", "猫 很 大"]);
    let policy = SubstitutionPolicy { rate: 0.8, max_phrase_len: 2, seed: 7 };
    print!("{}", pairs_to_text(&make_pairs(&mono, &lexicon, &policy)?));
    Ok(())
}
