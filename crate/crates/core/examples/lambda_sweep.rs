//! Cycle-weight sweep on a reduced toy task: one CycleGAN and one LM per
//! grid cell, reported as dev perplexity.
use codeswitch::corpus::Corpus;
use codeswitch::cyclegan::{lambda_sweep, pretrain, reverse_pairs, CycleGanTrainConfig, PretrainConfig, SweepConfig};
use codeswitch::lm::LmConfig;
use codeswitch::seq2seq::{Seq2SeqConfig, TrainConfig};
use codeswitch::synth::{generate_toy, make_pairs, SubstitutionPolicy, ToySpec};

fn main() -> codeswitch::Result<()> {
    let toy = generate_toy(&ToySpec { vocab_a_size: 20, vocab_b_size: 20, corpus_size: 200, cs_size: 300, seed: 2, ..ToySpec::default() })?;
    let pairs = make_pairs(&toy.mono, &toy.lexicon, &SubstitutionPolicy { rate: 0.25, max_phrase_len: 1, seed: 2 })?;
    let config = PretrainConfig {
        seq2seq: Seq2SeqConfig { embed: 16, hidden: 16, layers: 1 },
        train: TrainConfig { epochs: 10, ..TrainConfig::default() },
        ..PretrainConfig::default()
    };
    let (model, _, _) = pretrain(&pairs, &reverse_pairs(&pairs), &[&toy.mono, &toy.cs], &config)?;
    let base = Corpus::new("base", toy.cs.sentences[..100].to_vec());
    let dev = Corpus::new("dev", toy.cs.sentences[200..].to_vec());
    let sweep = SweepConfig {
        lambda1: vec![0.0, 0.3],
        lambda2: vec![0.5, 0.8],
        train: CycleGanTrainConfig { steps: 100, ..CycleGanTrainConfig::default() },
        lm: LmConfig { epochs: 3, ..LmConfig::default() },
        jobs: 2,
        ..SweepConfig::default()
    };
    let table = lambda_sweep(&model, &toy.mono, &toy.cs, &toy.mono, &base, &dev, &sweep)?;
    print!("{}", table.to_table());
    Ok(())
}
