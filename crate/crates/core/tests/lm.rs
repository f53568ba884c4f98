use std::collections::HashMap;

use codeswitch::corpus::{Corpus, Sentence};
use codeswitch::lm::{augmentation_experiment, perplexity, train_lm, LmConfig};
use codeswitch::rng::substream;
use codeswitch::synth::{generate_toy, ToySpec};
use rand::Rng as _;

fn small(epochs: usize) -> LmConfig {
    LmConfig { embed: 16, hidden: 32, epochs, lr: 1e-2, seed: 4, ..LmConfig::default() }
}

#[test]
fn loss_decreases_on_toy_text() {
    let toy = generate_toy(&ToySpec { corpus_size: 500, cs_size: 1, seed: 2, ..ToySpec::default() }).unwrap();
    let (_, report) = train_lm(&toy.mono, None, &LmConfig { epochs: 10, ..LmConfig::default() }).unwrap();
    let l = &report.epoch_losses;
    assert_eq!(l.len(), 10);
    assert!(l[9] < l[0], "{l:?}");
    assert!(l.windows(2).filter(|w| w[1] < w[0]).count() >= 7, "{l:?}");
}

#[test]
fn repeated_token_corpus_is_nearly_certain() {
    let lines = vec!["a a a a"; 100];
    let corpus = Corpus::from_lines("rep", &lines);
    let (model, _) = train_lm(&corpus, None, &small(30)).unwrap();
    let ppl = perplexity(&model, &corpus).unwrap().ppl;
    assert!(ppl <= 1.05, "ppl {ppl}");
}

/// Sentences from a first-order chain over five words that stops with
/// probability 0.1 after each word.
fn chain(n: usize, seed: u64) -> Corpus {
    let mut rng = substream(seed, "chain");
    let words = ["p", "q", "r", "s", "t"];
    let sentences = (0..n)
        .map(|_| {
            let mut w = rng.gen_range(0..5);
            let mut out = vec![words[w]];
            while rng.gen::<f64>() >= 0.1 {
                w = (w + if rng.gen_bool(0.5) { 1 } else { 2 }) % 5;
                out.push(words[w]);
            }
            Sentence::from_surfaces(&out)
        })
        .collect();
    Corpus::new("chain", sentences)
}

/// Maximum-likelihood bigram perplexity (BOS and EOS as states).
fn bigram_ppl(train: &Corpus, test: &Corpus) -> f64 {
    let seq = |s: &Sentence| {
        let mut v = vec!["<s>".to_string()];
        v.extend(s.surfaces().map(str::to_string));
        v.push("</s>".into());
        v
    };
    let mut pair: HashMap<(String, String), f64> = HashMap::new();
    let mut ctx: HashMap<String, f64> = HashMap::new();
    for s in train.iter() {
        for w in seq(s).windows(2) {
            *pair.entry((w[0].clone(), w[1].clone())).or_default() += 1.0;
            *ctx.entry(w[0].clone()).or_default() += 1.0;
        }
    }
    let (mut nll, mut n) = (0.0, 0.0);
    for s in test.iter() {
        for w in seq(s).windows(2) {
            nll -= (pair[&(w[0].clone(), w[1].clone())] / ctx[&w[0]]).ln();
            n += 1.0;
        }
    }
    (nll / n).exp()
}

#[test]
fn matches_bigram_count_oracle_on_markov_text() {
    let train = chain(2000, 1);
    let test = chain(300, 2);
    let oracle = bigram_ppl(&train, &test);
    let (model, _) = train_lm(&train, None, &small(5)).unwrap();
    let ppl = perplexity(&model, &test).unwrap().ppl;
    assert!((ppl / oracle - 1.0).abs() < 0.05, "lm {ppl} vs bigram {oracle}");
}

#[test]
fn augmenting_with_the_dev_text_helps() {
    let toy = generate_toy(&ToySpec { corpus_size: 1, cs_size: 300, seed: 7, ..ToySpec::default() }).unwrap();
    let base = Corpus::new("base", toy.cs.sentences[..200].to_vec());
    let dev = Corpus::new("dev", toy.cs.sentences[200..].to_vec());
    let report = augmentation_experiment(&base, &[("copy", &dev)], &dev, None, &small(5)).unwrap();
    let copy = report.arm("copy").unwrap().dev.ppl;
    assert!(copy <= report.baseline().dev.ppl, "{}", report.to_table());
}
