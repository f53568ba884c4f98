//! Recurrent language model, perplexity, and the augmentation A/B
//! experiment (baseline text vs. baseline plus generated text).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, Corpus, LanguageTag, Sentence, Token, Vocabulary, BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::nn::{
    clip_global_norm, AdamConfig, AdamState, Bound, Checkpoint, Embedding, Graph, Linear, LstmCell,
    Params, Tensor, Var,
};
use crate::rng;
use crate::seq2seq::time_major;

/// Modelling unit.
///
/// `Word` uses tokens as produced by the tokenizer (one per CJK character,
/// one per Latin word). `Character` additionally splits Latin words into
/// characters, marking each word's first character with `▁`, as a stand-in
/// for subword units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Word,
    Character,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    pub unit: Unit,
    pub embed: usize,
    pub hidden: usize,
    pub layers: usize,
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub clip: f64,
    pub seed: u64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            unit: Unit::Word,
            embed: 32,
            hidden: 64,
            layers: 1,
            batch: 20,
            epochs: 10,
            lr: 5e-3,
            clip: 5.0,
            seed: 0,
        }
    }
}

impl LmConfig {
    /// Word-level preset: one layer of 650 units, batch 20.
    pub fn large_word() -> Self {
        LmConfig {
            unit: Unit::Word,
            embed: 300,
            hidden: 650,
            layers: 1,
            batch: 20,
            ..LmConfig::default()
        }
    }

    /// Subword-analog preset: two layers of 650 units, batch 256.
    pub fn large_subword() -> Self {
        LmConfig {
            unit: Unit::Character,
            embed: 300,
            hidden: 650,
            layers: 2,
            batch: 256,
            ..LmConfig::default()
        }
    }
}

/// Re-segments a sentence into the configured unit.
pub fn units(sentence: &Sentence, unit: Unit) -> Sentence {
    match unit {
        Unit::Word => sentence.clone(),
        Unit::Character => {
            let mut tokens = Vec::with_capacity(sentence.len());
            for t in &sentence.tokens {
                if t.tag() != LanguageTag::LangB {
                    tokens.push(t.clone());
                    continue;
                }
                for (i, c) in t.surface().chars().enumerate() {
                    tokens.push(Token::new(if i == 0 { format!("▁{c}") } else { c.to_string() }));
                }
            }
            Sentence::new(tokens)
        }
    }
}

fn corpus_units(corpus: &Corpus, unit: Unit) -> Corpus {
    Corpus::new(corpus.name.clone(), corpus.iter().map(|s| units(s, unit)).collect())
}

#[derive(Debug, Clone)]
pub struct LanguageModel {
    pub config: LmConfig,
    pub vocab: Vocabulary,
    pub params: Params,
    embed: Embedding,
    cells: Vec<LstmCell>,
    out: Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub corpus: String,
    pub tokens: usize,
    pub mean_nll: f64,
    pub ppl: f64,
}

impl LanguageModel {
    pub fn new(vocab: Vocabulary, config: LmConfig) -> Result<Self> {
        if config.embed == 0 || config.hidden == 0 || config.layers == 0 {
            return Err(Error::Config("language model dimensions must be positive".into()));
        }
        let seed = config.seed;
        let mut params = Params::new();
        let embed = Embedding::new(&mut params, "embed", vocab.len(), config.embed, &mut rng::substream(seed, "init:lm-embed"));
        let cells = (0..config.layers)
            .map(|l| {
                let input = if l == 0 { config.embed } else { config.hidden };
                let tag = format!("lstm{l}");
                LstmCell::new(&mut params, &tag, input, config.hidden, &mut rng::substream(seed, &format!("init:lm-{tag}")))
            })
            .collect();
        let out = Linear::new(&mut params, "out", config.hidden, vocab.len(), &mut rng::substream(seed, "init:lm-out"));
        Ok(LanguageModel {
            config,
            vocab,
            params,
            embed,
            cells,
            out,
        })
    }

    /// Zeroes the output projection so every step predicts the uniform
    /// distribution over the vocabulary.
    pub fn make_uniform(&mut self) {
        for id in [self.out.weight, self.out.bias] {
            for v in self.params.get_mut(id).data_mut() {
                *v = 0.0;
            }
        }
    }

    /// `(input, target)` = `(BOS s, s EOS)` in model units.
    pub fn frame(&self, sentence: &Sentence) -> (Vec<usize>, Vec<usize>) {
        let body = self.vocab.encode(&units(sentence, self.config.unit), false);
        let mut input = vec![BOS];
        input.extend_from_slice(&body);
        let mut target = body;
        target.push(EOS);
        (input, target)
    }

    /// Per-step logits over a padded batch.
    pub fn logits(&self, g: &mut Graph, p: &Bound, inputs: &[Vec<usize>]) -> Result<Vec<Var>> {
        let size = self.vocab.len();
        if let Some(&id) = inputs.iter().flatten().find(|&&id| id >= size) {
            return Err(Error::IdOutOfRange { id, size });
        }
        let (ids, _) = time_major(inputs);
        let mut states: Vec<_> = self.cells.iter().map(|c| c.zero_state(g, inputs.len())).collect();
        let mut out = Vec::with_capacity(ids.len());
        for step in &ids {
            let mut x = self.embed.lookup(g, p, step)?;
            for (cell, st) in self.cells.iter().zip(states.iter_mut()) {
                *st = cell.step(g, p, x, *st)?;
                x = st.h;
            }
            out.push(self.out.forward(g, p, x)?);
        }
        Ok(out)
    }

    /// Summed NLL of the targets and the number of scored positions.
    pub fn batch_nll(&self, g: &mut Graph, p: &Bound, batch: &[(Vec<usize>, Vec<usize>)]) -> Result<(Var, usize)> {
        let inputs: Vec<Vec<usize>> = batch.iter().map(|b| b.0.clone()).collect();
        let targets: Vec<Vec<usize>> = batch.iter().map(|b| b.1.clone()).collect();
        let size = self.vocab.len();
        if let Some(&id) = targets.iter().flatten().find(|&&id| id >= size) {
            return Err(Error::IdOutOfRange { id, size });
        }
        let logits = self.logits(g, p, &inputs)?;
        let (tids, tmask) = time_major(&targets);
        let mut acc: Option<Var> = None;
        let mut count = 0;
        for ((l, t), m) in logits.iter().zip(&tids).zip(&tmask) {
            let ce = g.cross_entropy_sum(*l, t, Some(PAD))?;
            acc = Some(match acc {
                None => ce,
                Some(a) => g.add(a, ce)?,
            });
            count += m.iter().filter(|x| **x).count();
        }
        let total = match acc {
            Some(a) => a,
            None => g.constant(Tensor::scalar(0.0)),
        };
        Ok((total, count))
    }

    /// Summed NLL over id-encoded sentences, evaluated in batches.
    pub fn nll_ids(&self, data: &[(Vec<usize>, Vec<usize>)], batch: usize) -> Result<(f64, usize)> {
        let (mut total, mut count) = (0.0, 0);
        for chunk in data.chunks(batch.max(1)) {
            let mut g = Graph::new();
            let p = g.bind(&self.params, false);
            let (s, n) = self.batch_nll(&mut g, &p, chunk)?;
            total += g.scalar(s);
            count += n;
        }
        Ok((total, count))
    }

    /// Next-unit distribution after each prefix of `sentence`.
    pub fn step_distributions(&self, sentence: &Sentence) -> Result<Vec<Vec<f64>>> {
        let (input, _) = self.frame(sentence);
        let mut g = Graph::new();
        let p = g.bind(&self.params, false);
        let logits = self.logits(&mut g, &p, &[input])?;
        logits
            .into_iter()
            .map(|l| {
                let s = g.softmax(l)?;
                Ok(g.value(s).data().to_vec())
            })
            .collect()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            "lm",
            serde_json::json!({ "config": self.config, "vocab": self.vocab }),
            &self.params,
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("lm")?;
        let config: LmConfig = serde_json::from_value(ck.meta["config"].clone())?;
        let vocab: Vocabulary = serde_json::from_value(ck.meta["vocab"].clone())?;
        let mut model = LanguageModel::new(vocab, config)?;
        model.params.load_from(&ck.params()?)?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmTrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Vocabulary over the units of `corpora`.
pub fn lm_vocab(corpora: &[&Corpus], unit: Unit) -> Result<Vocabulary> {
    let converted: Vec<Corpus> = corpora.iter().map(|c| corpus_units(c, unit)).collect();
    let refs: Vec<&Corpus> = converted.iter().collect();
    build_vocab(&refs, 1)
}

/// Trains a new model over `vocab` (or one built from `corpus`).
pub fn train_lm(
    corpus: &Corpus,
    vocab: Option<Vocabulary>,
    config: &LmConfig,
) -> Result<(LanguageModel, LmTrainReport)> {
    if corpus.is_empty() {
        return Err(Error::Data(format!("corpus {:?} is empty", corpus.name)));
    }
    let vocab = match vocab {
        Some(v) => v,
        None => lm_vocab(&[corpus], config.unit)?,
    };
    let mut model = LanguageModel::new(vocab, *config)?;
    let data: Vec<(Vec<usize>, Vec<usize>)> = corpus.iter().map(|s| model.frame(s)).collect();
    let mut adam = AdamState::new(&model.params, AdamConfig::with_lr(config.lr));
    let mut order_rng = rng::substream(config.seed, "lm:batch-order");
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut order_rng);
        let (mut total, mut count) = (0.0, 0usize);
        for chunk in order.chunks(config.batch.max(1)) {
            let batch: Vec<(Vec<usize>, Vec<usize>)> = chunk.iter().map(|&i| data[i].clone()).collect();
            let mut g = Graph::new();
            let p = g.bind(&model.params, true);
            let (sum, n) = model.batch_nll(&mut g, &p, &batch)?;
            let loss = g.scale(sum, 1.0 / n.max(1) as f64)?;
            let mut grads = g.backward(loss)?;
            let mut gs: Vec<Tensor> = p
                .vars()
                .iter()
                .zip(model.params.tensors())
                .map(|(v, t)| grads.take(*v).unwrap_or_else(|| Tensor::zeros_like(t)))
                .collect();
            clip_global_norm(&mut gs, config.clip);
            adam.update(&mut model.params, &gs)?;
            total += g.scalar(sum);
            count += n;
        }
        epoch_losses.push(total / count.max(1) as f64);
    }
    Ok((model, LmTrainReport { epoch_losses }))
}

/// `exp` of the token-mean NLL, counting EOS and excluding BOS and PAD.
pub fn perplexity(model: &LanguageModel, corpus: &Corpus) -> Result<PerplexityReport> {
    let data: Vec<(Vec<usize>, Vec<usize>)> = corpus.iter().map(|s| model.frame(s)).collect();
    perplexity_ids(model, &corpus.name, &data)
}

/// Perplexity over pre-encoded `(input, target)` sequences; ids outside the
/// model's vocabulary are a mismatch error.
pub fn perplexity_ids(model: &LanguageModel, name: &str, data: &[(Vec<usize>, Vec<usize>)]) -> Result<PerplexityReport> {
    let size = model.vocab.len();
    if let Some(&id) = data.iter().flat_map(|(i, t)| i.iter().chain(t)).find(|&&id| id >= size) {
        return Err(Error::Data(format!(
            "vocabulary mismatch: id {id} but the model has {size} entries"
        )));
    }
    let (total, tokens) = model.nll_ids(data, 64)?;
    let mean_nll = if tokens == 0 { 0.0 } else { total / tokens as f64 };
    Ok(PerplexityReport {
        corpus: name.to_owned(),
        tokens,
        mean_nll,
        ppl: mean_nll.exp(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub arm: String,
    pub train_sentences: usize,
    pub dev: PerplexityReport,
    pub eval: Option<PerplexityReport>,
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    pub arms: Vec<ArmResult>,
}

impl AbReport {
    pub fn baseline(&self) -> &ArmResult {
        &self.arms[0]
    }

    pub fn arm(&self, name: &str) -> Option<&ArmResult> {
        self.arms.iter().find(|a| a.arm == name)
    }

    /// `arm,dev_ppl,eval_ppl` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arm,dev_ppl,eval_ppl\n");
        for a in &self.arms {
            let eval = a.eval.as_ref().map(|e| format!("{:.4}", e.ppl)).unwrap_or_default();
            out.push_str(&format!("{},{:.4},{}\n", a.arm, a.dev.ppl, eval));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let width = self.arms.iter().map(|a| a.arm.len()).max().unwrap_or(3).max(3);
        let mut out = format!("{:<width$} | {:>9} | {:>9}\n", "arm", "dev", "eval");
        for a in &self.arms {
            let eval = a.eval.as_ref().map(|e| format!("{:.2}", e.ppl)).unwrap_or_else(|| "-".into());
            out.push_str(&format!("{:<width$} | {:>9.2} | {:>9}\n", a.arm, a.dev.ppl, eval));
        }
        out
    }
}

/// Trains one LM on `base` and one on `base` plus each generated corpus,
/// all with the same vocabulary, seed and schedule, and scores each on the
/// held-out sets. The first arm is always `baseline`.
pub fn augmentation_experiment(
    base: &Corpus,
    generated: &[(&str, &Corpus)],
    dev: &Corpus,
    eval: Option<&Corpus>,
    config: &LmConfig,
) -> Result<AbReport> {
    let mut all: Vec<&Corpus> = vec![base, dev];
    all.extend(generated.iter().map(|(_, c)| *c));
    all.extend(eval);
    let vocab = lm_vocab(&all, config.unit)?;

    let mut arms = Vec::with_capacity(generated.len() + 1);
    let mut run = |name: &str, train: Corpus| -> Result<()> {
        let (model, report) = train_lm(&train, Some(vocab.clone()), config)?;
        arms.push(ArmResult {
            arm: name.to_owned(),
            train_sentences: train.len(),
            dev: perplexity(&model, dev)?,
            eval: eval.map(|e| perplexity(&model, e)).transpose()?,
            epoch_losses: report.epoch_losses,
        });
        Ok(())
    };
    run("baseline", base.clone())?;
    for (name, corpus) in generated {
        run(name, base.concat(corpus))?;
    }
    Ok(AbReport { arms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn corpus() -> Corpus {
        Corpus::from_lines("c", &["我 like 咖 啡", "then 就 这", "(laugh) ok"])
    }

    #[test]
    fn uniform_model_has_vocab_size_perplexity() {
        let c = corpus();
        let vocab = lm_vocab(&[&c], Unit::Word).unwrap();
        let v = vocab.len();
        let mut model = LanguageModel::new(vocab, LmConfig::default()).unwrap();
        model.make_uniform();
        let r = perplexity(&model, &c).unwrap();
        assert!((r.ppl - v as f64).abs() < 1e-9, "{} vs {v}", r.ppl);
        assert_eq!(r.tokens, c.token_count() + c.len());
    }

    #[test]
    fn distributions_are_normalized() {
        let c = corpus();
        let (model, _) = train_lm(&c, None, &LmConfig { epochs: 2, ..LmConfig::default() }).unwrap();
        for dist in model.step_distributions(&c.sentences[0]).unwrap() {
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn order_invariant_and_batch_consistent() {
        let c = corpus();
        let (model, _) = train_lm(&c, None, &LmConfig { epochs: 3, ..LmConfig::default() }).unwrap();
        let mut rev = c.clone();
        rev.sentences.reverse();
        let a = perplexity(&model, &c).unwrap();
        let b = perplexity(&model, &rev).unwrap();
        assert!((a.ppl - b.ppl).abs() < 1e-9);
        let data: Vec<_> = c.iter().map(|s| model.frame(s)).collect();
        let (batched, _) = model.nll_ids(&data, 64).unwrap();
        let single: f64 = data.iter().map(|d| model.nll_ids(std::slice::from_ref(d), 1).unwrap().0).sum();
        assert!((batched - single).abs() < 1e-9);
    }

    #[test]
    fn zero_lr_is_flat_and_seed_is_deterministic() {
        let c = corpus();
        let cfg = LmConfig { epochs: 3, lr: 0.0, ..LmConfig::default() };
        let (m0, r) = train_lm(&c, None, &cfg).unwrap();
        assert!(r.epoch_losses.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        let fresh = LanguageModel::new(m0.vocab.clone(), cfg).unwrap();
        assert_eq!(m0.params, fresh.params);
        let cfg = LmConfig { epochs: 3, ..LmConfig::default() };
        let (a, _) = train_lm(&c, None, &cfg).unwrap();
        let (b, _) = train_lm(&c, None, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert!(train_lm(&Corpus::default(), None, &cfg).is_err());
    }

    #[test]
    fn vocabulary_mismatch() {
        let c = corpus();
        let (model, _) = train_lm(&c, None, &LmConfig { epochs: 1, ..LmConfig::default() }).unwrap();
        let bad = vec![(vec![BOS, 10_000], vec![10_000, EOS])];
        assert!(matches!(perplexity_ids(&model, "x", &bad), Err(Error::Data(_))));
    }

    #[test]
    fn character_units() {
        let s = units(&tokenize("我 like (laugh)"), Unit::Character);
        let surf: Vec<&str> = s.surfaces().collect();
        assert_eq!(surf, ["我", "▁l", "i", "k", "e", "(laugh)"]);
        assert!(s.tokens[1..5].iter().all(|t| t.tag() == LanguageTag::LangB));
    }

    #[test]
    fn empty_generation_changes_nothing() {
        let c = corpus();
        let cfg = LmConfig { epochs: 2, ..LmConfig::default() };
        let empty = Corpus::new("gen", vec![]);
        let r = augmentation_experiment(&c, &[("gen", &empty)], &c, None, &cfg).unwrap();
        assert_eq!(r.arms.len(), 2);
        assert_eq!(r.arms[0].dev.ppl, r.arms[1].dev.ppl);
        assert!(r.to_csv().starts_with("arm,dev_ppl,eval_ppl\nbaseline,"));
    }
}
