//! Trains a small encoder-decoder on toy pairs and decodes a few sources.
use codeswitch::corpus::{build_vocab, Corpus};
use codeswitch::seq2seq::{exact_match, train, Seq2SeqConfig, Seq2SeqModel, TrainConfig};
use codeswitch::synth::{generate_toy, make_pairs, SubstitutionPolicy, ToySpec};

fn main() -> codeswitch::Result<()> {
    let toy = generate_toy(&ToySpec { corpus_size: 50, cs_size: 1, seed: 1, ..ToySpec::default() })?;
    let pairs = make_pairs(&toy.mono, &toy.lexicon, &SubstitutionPolicy { rate: 0.35, max_phrase_len: 1, seed: 1 })?;
    let x = Corpus::new("x", pairs.iter().map(|p| p.0.clone()).collect());
    let y = Corpus::new("y", pairs.iter().map(|p| p.1.clone()).collect());
    let mut model = Seq2SeqModel::new(build_vocab(&[&x, &y], 1)?, Seq2SeqConfig { embed: 32, hidden: 32, layers: 1 }, 1)?;
    for round in 0..5 {
        let report = train(&mut model, &pairs, &TrainConfig { epochs: 20, lr: 1e-2, seed: round, ..TrainConfig::default() })?;
        println!(
            "epochs {:3}  loss {:.4}  exact match {:.2}",
            20 * (round + 1),
            report.epoch_losses.last().unwrap(),
            exact_match(&model, &pairs)?
        );
    }
    for (src, tgt) in pairs.iter().take(3) {
        let out = model.greedy_decode(src, 40)?;
        println!("{src}\n  -> {}\n  ref {tgt}", model.vocab.decode(&out.ids)?);
    }
    Ok(())
}
