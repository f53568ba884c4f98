//! Recurrent encoder-decoder.
//!
//! The encoder reads the source followed by EOS; its final hidden and cell
//! states initialise the decoder, which models
//! `P(y_1..y_T' | x) = prod_t P(y_t | v, y_<t)` with `v` the encoder's
//! last state. There is no attention. Source and target share one
//! vocabulary so outputs can be fed back as inputs.
//!
//! Besides teacher-forced likelihood and hard greedy/sampled decoding, the
//! model exposes a *soft* decoder and a *soft* encoder: the decoder emits a
//! distribution per step and feeds back the expected embedding, and the
//! encoder accepts such distribution sequences. Together they give a
//! differentiable path through generated text.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, Vocabulary, BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::nn::{
    clip_global_norm, AdamConfig, AdamState, Bound, Checkpoint, Embedding, Graph, Linear,
    LstmCell, LstmState, Params, Tensor, Var,
};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seq2SeqConfig {
    pub embed: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl Default for Seq2SeqConfig {
    fn default() -> Self {
        Seq2SeqConfig {
            embed: 64,
            hidden: 64,
            layers: 1,
        }
    }
}

impl Seq2SeqConfig {
    /// Generator size used for the full-scale experiments: two layers of
    /// 650 LSTM units over 300-dimensional embeddings.
    pub fn large() -> Self {
        Seq2SeqConfig {
            embed: 300,
            hidden: 650,
            layers: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch: 16,
            lr: 5e-3,
            clip: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Token-mean NLL of each epoch, measured during the epoch.
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Output ids without BOS, ending before EOS.
    pub ids: Vec<usize>,
    /// Log-probability of every emitted step, EOS included when reached.
    pub log_probs: Vec<f64>,
    /// Per-step output distributions, when requested.
    pub distributions: Option<Vec<Vec<f64>>>,
    pub reached_eos: bool,
}

/// One step of a soft sequence: a `batch x vocab` distribution per row and
/// which rows are still inside their sequence.
#[derive(Debug, Clone)]
pub struct SoftStep {
    pub probs: Var,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Seq2SeqModel {
    pub config: Seq2SeqConfig,
    pub vocab: Vocabulary,
    pub params: Params,
    embed: Embedding,
    encoder: Vec<LstmCell>,
    decoder: Vec<LstmCell>,
    out: Linear,
}

/// Time-major view of a padded batch.
pub(crate) fn time_major(seqs: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<Vec<bool>>) {
    let steps = seqs.iter().map(Vec::len).max().unwrap_or(0);
    let mut ids = Vec::with_capacity(steps);
    let mut masks = Vec::with_capacity(steps);
    for t in 0..steps {
        ids.push(seqs.iter().map(|s| s.get(t).copied().unwrap_or(PAD)).collect());
        masks.push(seqs.iter().map(|s| t < s.len()).collect());
    }
    (ids, masks)
}

/// Appends EOS.
pub fn source_ids(vocab: &Vocabulary, s: &Sentence) -> Vec<usize> {
    let mut ids = vocab.encode(s, false);
    ids.push(EOS);
    ids
}

/// `(decoder input, decoder target)` = `(BOS y, y EOS)`.
pub fn target_ids(vocab: &Vocabulary, s: &Sentence) -> (Vec<usize>, Vec<usize>) {
    let body = vocab.encode(s, false);
    let mut input = Vec::with_capacity(body.len() + 1);
    input.push(BOS);
    input.extend_from_slice(&body);
    let mut target = body;
    target.push(EOS);
    (input, target)
}

fn sum_vars(g: &mut Graph, vars: &[Var]) -> Result<Var> {
    let mut acc = vars[0];
    for v in &vars[1..] {
        acc = g.add(acc, *v)?;
    }
    Ok(acc)
}

fn log_softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(|v| v - lse).collect()
}

impl Seq2SeqModel {
    pub fn new(vocab: Vocabulary, config: Seq2SeqConfig, seed: u64) -> Result<Self> {
        if config.embed == 0 || config.hidden == 0 || config.layers == 0 {
            return Err(Error::Config("seq2seq dimensions must be positive".into()));
        }
        let mut params = Params::new();
        let v = vocab.len();
        let embed = Embedding::new(&mut params, "embed", v, config.embed, &mut rng::substream(seed, "init:embed"));
        let mut stack = |name: &str| -> Vec<LstmCell> {
            (0..config.layers)
                .map(|l| {
                    let input = if l == 0 { config.embed } else { config.hidden };
                    let tag = format!("{name}{l}");
                    LstmCell::new(&mut params, &tag, input, config.hidden, &mut rng::substream(seed, &format!("init:{tag}")))
                })
                .collect()
        };
        let encoder = stack("enc");
        let decoder = stack("dec");
        let out = Linear::new(&mut params, "out", config.hidden, v, &mut rng::substream(seed, "init:out"));
        Ok(Seq2SeqModel {
            config,
            vocab,
            params,
            embed,
            encoder,
            decoder,
            out,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn check_ids(&self, seqs: &[Vec<usize>]) -> Result<()> {
        let size = self.vocab_size();
        for s in seqs {
            if let Some(&id) = s.iter().find(|&&id| id >= size) {
                return Err(Error::IdOutOfRange { id, size });
            }
        }
        Ok(())
    }

    fn run_stack(
        cells: &[LstmCell],
        g: &mut Graph,
        p: &Bound,
        input: Var,
        states: &mut [LstmState],
        mask: Option<&[bool]>,
    ) -> Result<Var> {
        let mut x = input;
        for (cell, st) in cells.iter().zip(states.iter_mut()) {
            *st = match mask {
                Some(m) => cell.step_masked(g, p, x, *st, m)?,
                None => cell.step(g, p, x, *st)?,
            };
            x = st.h;
        }
        Ok(x)
    }

    /// Encodes hard id sequences (each already ending in EOS).
    pub fn encode(&self, g: &mut Graph, p: &Bound, src: &[Vec<usize>]) -> Result<Vec<LstmState>> {
        self.check_ids(src)?;
        let mut states: Vec<LstmState> = self.encoder.iter().map(|c| c.zero_state(g, src.len())).collect();
        let (ids, masks) = time_major(src);
        for (step_ids, mask) in ids.iter().zip(&masks) {
            let x = self.embed.lookup(g, p, step_ids)?;
            Self::run_stack(&self.encoder, g, p, x, &mut states, Some(mask))?;
        }
        Ok(states)
    }

    /// Encodes soft sequences through expected embeddings.
    pub fn encode_soft(&self, g: &mut Graph, p: &Bound, steps: &[SoftStep]) -> Result<Vec<LstmState>> {
        let batch = steps
            .first()
            .map(|s| s.mask.len())
            .ok_or_else(|| Error::Data("empty soft sequence".into()))?;
        let mut states: Vec<LstmState> = self.encoder.iter().map(|c| c.zero_state(g, batch)).collect();
        for step in steps {
            let x = self.embed.soft(g, p, step.probs)?;
            Self::run_stack(&self.encoder, g, p, x, &mut states, Some(&step.mask))?;
        }
        Ok(states)
    }

    /// Teacher-forced decoder; returns the summed target NLL and the number
    /// of non-PAD target positions.
    pub fn teacher_forced_nll(
        &self,
        g: &mut Graph,
        p: &Bound,
        init: Vec<LstmState>,
        input: &[Vec<usize>],
        target: &[Vec<usize>],
    ) -> Result<(Var, usize)> {
        self.check_ids(input)?;
        self.check_ids(target)?;
        let mut states = init;
        let (in_ids, _) = time_major(input);
        let (out_ids, out_mask) = time_major(target);
        let mut terms = Vec::with_capacity(in_ids.len());
        let mut count = 0;
        for (step_in, (step_out, mask)) in in_ids.iter().zip(out_ids.iter().zip(&out_mask)) {
            let x = self.embed.lookup(g, p, step_in)?;
            let h = Self::run_stack(&self.decoder, g, p, x, &mut states, None)?;
            let logits = self.out.forward(g, p, h)?;
            terms.push(g.cross_entropy_sum(logits, step_out, Some(PAD))?);
            count += mask.iter().filter(|m| **m).count();
        }
        Ok((sum_vars(g, &terms)?, count))
    }

    /// Summed teacher-forced NLL of a batch of framed pairs.
    pub fn batch_nll(&self, g: &mut Graph, p: &Bound, pairs: &[(Vec<usize>, Vec<usize>, Vec<usize>)]) -> Result<(Var, usize)> {
        let src: Vec<Vec<usize>> = pairs.iter().map(|(s, _, _)| s.clone()).collect();
        let input: Vec<Vec<usize>> = pairs.iter().map(|(_, i, _)| i.clone()).collect();
        let target: Vec<Vec<usize>> = pairs.iter().map(|(_, _, t)| t.clone()).collect();
        let init = self.encode(g, p, &src)?;
        self.teacher_forced_nll(g, p, init, &input, &target)
    }

    fn encode_pair(&self, x: &Sentence, y: &Sentence) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let (i, t) = target_ids(&self.vocab, y);
        (source_ids(&self.vocab, x), i, t)
    }

    /// `-sum_t log P(y_t | v, y_<t)` for one pair, EOS included.
    pub fn nll(&self, x: &Sentence, y: &Sentence) -> Result<f64> {
        self.nll_ids(&[self.encode_pair(x, y)]).map(|(sum, _)| sum)
    }

    /// NLL divided by the number of target positions (tokens + EOS).
    pub fn nll_mean(&self, x: &Sentence, y: &Sentence) -> Result<f64> {
        self.nll_ids(&[self.encode_pair(x, y)]).map(|(sum, n)| sum / n as f64)
    }

    /// Summed NLL and position count over id-encoded `(src, dec_in, dec_out)`
    /// triples, evaluated as one padded batch.
    pub fn nll_ids(&self, batch: &[(Vec<usize>, Vec<usize>, Vec<usize>)]) -> Result<(f64, usize)> {
        let mut g = Graph::new();
        let p = g.bind(&self.params, false);
        let (loss, n) = self.batch_nll(&mut g, &p, batch)?;
        Ok((g.scalar(loss), n))
    }

    /// Summed NLL of sentence pairs as one padded batch.
    pub fn batch_nll_pairs(&self, pairs: &[(Sentence, Sentence)]) -> Result<f64> {
        let enc: Vec<_> = pairs.iter().map(|(x, y)| self.encode_pair(x, y)).collect();
        self.nll_ids(&enc).map(|(s, _)| s)
    }

    /// Free-running decoder emitting soft distributions. Each step's
    /// distribution is `softmax(logits / temperature)`; the next input is
    /// its expected embedding. A row ends after the step whose argmax is
    /// EOS, or after `max_len` steps.
    pub fn decode_soft(
        &self,
        g: &mut Graph,
        p: &Bound,
        init: Vec<LstmState>,
        max_len: usize,
        temperature: f64,
    ) -> Result<Vec<SoftStep>> {
        let batch = init.first().map(|s| g.value(s.h).rows()).unwrap_or(0);
        let mut states = init;
        let mut x = self.embed.lookup(g, p, &vec![BOS; batch])?;
        let mut alive = vec![true; batch];
        let mut steps = Vec::with_capacity(max_len);
        for _ in 0..max_len {
            let h = Self::run_stack(&self.decoder, g, p, x, &mut states, None)?;
            let logits = self.out.forward(g, p, h)?;
            let scaled = if temperature == 1.0 { logits } else { g.scale(logits, 1.0 / temperature)? };
            let probs = g.softmax(scaled)?;
            let argmax = g.value(probs).argmax_rows();
            steps.push(SoftStep {
                probs,
                mask: alive.clone(),
            });
            for (a, id) in alive.iter_mut().zip(argmax) {
                if id == EOS {
                    *a = false;
                }
            }
            if !alive.iter().any(|a| *a) {
                break;
            }
            x = self.embed.soft(g, p, probs)?;
        }
        Ok(steps)
    }

    /// Batched hard decoding: greedy when `rng` is `None`, otherwise
    /// multinomial sampling at `temperature`.
    pub fn decode_batch(
        &self,
        src: &[Vec<usize>],
        max_len: usize,
        temperature: f64,
        mut rng: Option<&mut Rng>,
        keep_distributions: bool,
    ) -> Result<Vec<DecodeResult>> {
        let mut g = Graph::new();
        let p = g.bind(&self.params, false);
        let mut states = self.encode(&mut g, &p, src)?;
        let batch = src.len();
        let mut results: Vec<DecodeResult> = (0..batch)
            .map(|_| DecodeResult {
                ids: Vec::new(),
                log_probs: Vec::new(),
                distributions: keep_distributions.then(Vec::new),
                reached_eos: false,
            })
            .collect();
        let mut prev = vec![BOS; batch];
        for _ in 0..max_len {
            if results.iter().all(|r| r.reached_eos) {
                break;
            }
            let x = self.embed.lookup(&mut g, &p, &prev)?;
            let h = Self::run_stack(&self.decoder, &mut g, &p, x, &mut states, None)?;
            let logits = self.out.forward(&mut g, &p, h)?;
            let lv = g.value(logits).clone();
            for (r, res) in results.iter_mut().enumerate() {
                if res.reached_eos {
                    continue;
                }
                let logp = log_softmax_row(lv.row(r));
                let choice = match rng.as_deref_mut() {
                    None => argmax(&logp),
                    Some(rng) => sample(&logp, temperature, rng),
                };
                res.log_probs.push(logp[choice]);
                if let Some(d) = res.distributions.as_mut() {
                    d.push(logp.iter().map(|v| v.exp()).collect());
                }
                if choice == EOS {
                    res.reached_eos = true;
                } else {
                    res.ids.push(choice);
                }
                prev[r] = choice;
            }
        }
        Ok(results)
    }

    pub fn greedy_decode(&self, x: &Sentence, max_len: usize) -> Result<DecodeResult> {
        if max_len == 0 {
            return Err(Error::Config("max_len must be at least 1".into()));
        }
        let src = vec![source_ids(&self.vocab, x)];
        Ok(self.decode_batch(&src, max_len, 1.0, None, false)?.remove(0))
    }

    pub fn sample_decode(&self, x: &Sentence, max_len: usize, temperature: f64, seed: u64) -> Result<DecodeResult> {
        if max_len == 0 {
            return Err(Error::Config("max_len must be at least 1".into()));
        }
        if temperature <= 0.0 {
            return Err(Error::Config("temperature must be positive".into()));
        }
        let src = vec![source_ids(&self.vocab, x)];
        let mut r = rng::substream(seed, "sample-decode");
        Ok(self.decode_batch(&src, max_len, temperature, Some(&mut r), false)?.remove(0))
    }

    /// Decodes a whole corpus in batches of `batch`, greedy or sampled.
    pub fn translate(
        &self,
        corpus: &Corpus,
        mode: DecodeMode,
        batch: usize,
        name: &str,
    ) -> Result<Corpus> {
        let mut out = Vec::with_capacity(corpus.len());
        let mut sample_rng = match mode {
            DecodeMode::Sample { seed, .. } => Some(rng::substream(seed, "generate")),
            DecodeMode::Greedy => None,
        };
        let temperature = match mode {
            DecodeMode::Sample { temperature, .. } => temperature,
            DecodeMode::Greedy => 1.0,
        };
        for chunk in corpus.sentences.chunks(batch.max(1)) {
            let src: Vec<Vec<usize>> = chunk.iter().map(|s| source_ids(&self.vocab, s)).collect();
            let max_len = chunk.iter().map(Sentence::len).max().unwrap_or(0) * 2 + 4;
            let decoded = self.decode_batch(&src, max_len, temperature, sample_rng.as_mut(), false)?;
            for (s, d) in chunk.iter().zip(decoded) {
                let mut sentence = self.vocab.decode(&d.ids)?;
                sentence.id = s.id.clone();
                out.push(sentence);
            }
        }
        Ok(Corpus::new(name, out))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            "seq2seq",
            serde_json::json!({ "config": self.config, "vocab": self.vocab }),
            &self.params,
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("seq2seq")?;
        let config: Seq2SeqConfig = serde_json::from_value(ck.meta["config"].clone())?;
        let vocab: Vocabulary = serde_json::from_value(ck.meta["vocab"].clone())?;
        let mut model = Seq2SeqModel::new(vocab, config, 0)?;
        model.params.load_from(&ck.params()?)?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum DecodeMode {
    Greedy,
    Sample { temperature: f64, seed: u64 },
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn sample(logp: &[f64], temperature: f64, rng: &mut Rng) -> usize {
    let scaled: Vec<f64> = logp.iter().map(|v| v / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let draw = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if draw < acc {
            return i;
        }
    }
    argmax(&weights)
}

pub type EncodedPair = (Vec<usize>, Vec<usize>, Vec<usize>);

/// Encodes `(source, target)` pairs for training.
pub fn encode_pairs(vocab: &Vocabulary, pairs: &[(Sentence, Sentence)]) -> Vec<EncodedPair> {
    pairs
        .iter()
        .map(|(x, y)| {
            let (i, t) = target_ids(vocab, y);
            (source_ids(vocab, x), i, t)
        })
        .collect()
}

/// Mini-batch training of the teacher-forced NLL with Adam and global-norm
/// clipping. Batch order is drawn from the `batch-order` substream of
/// `config.seed`.
pub fn train(model: &mut Seq2SeqModel, pairs: &[(Sentence, Sentence)], config: &TrainConfig) -> Result<TrainReport> {
    if pairs.is_empty() {
        return Err(Error::Data("no training pairs".into()));
    }
    let data = encode_pairs(&model.vocab, pairs);
    let mut adam = AdamState::new(&model.params, AdamConfig::with_lr(config.lr));
    let mut order_rng = rng::substream(config.seed, "batch-order");
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut order_rng);
        let (mut total, mut count) = (0.0, 0usize);
        for chunk in order.chunks(config.batch.max(1)) {
            let batch: Vec<EncodedPair> = chunk.iter().map(|&i| data[i].clone()).collect();
            let (loss, n) = train_step(model, &batch, &mut adam, config.clip)?;
            total += loss;
            count += n;
        }
        epoch_losses.push(total / count.max(1) as f64);
    }
    Ok(TrainReport { epoch_losses })
}

/// One Adam step on the token-mean NLL of `batch`; returns the summed NLL
/// before the update and the token count.
pub fn train_step(
    model: &mut Seq2SeqModel,
    batch: &[EncodedPair],
    adam: &mut AdamState,
    clip: f64,
) -> Result<(f64, usize)> {
    let mut g = Graph::new();
    let p = g.bind(&model.params, true);
    let (sum, n) = model.batch_nll(&mut g, &p, batch)?;
    let loss = g.scale(sum, 1.0 / n.max(1) as f64)?;
    let mut grads = g.backward(loss)?;
    let mut gs: Vec<Tensor> = p
        .vars()
        .iter()
        .zip(model.params.tensors())
        .map(|(v, t)| grads.take(*v).unwrap_or_else(|| Tensor::zeros_like(t)))
        .collect();
    clip_global_norm(&mut gs, clip);
    adam.update(&mut model.params, &gs)?;
    Ok((g.scalar(sum), n))
}

/// Fraction of pairs whose greedy decoding reproduces the target exactly.
pub fn exact_match(model: &Seq2SeqModel, pairs: &[(Sentence, Sentence)]) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let src = Corpus::new("src", pairs.iter().map(|(x, _)| x.clone()).collect());
    let out = model.translate(&src, DecodeMode::Greedy, 64, "out")?;
    let hits = out
        .iter()
        .zip(pairs)
        .filter(|(o, (_, y))| o.tokens == y.tokens)
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, tokenize};
    use crate::nn::grad_check_params;

    fn tiny_model(seed: u64) -> (Seq2SeqModel, Vec<(Sentence, Sentence)>) {
        let pairs: Vec<(Sentence, Sentence)> = [
            ("一 二 三", "one 二 three"),
            ("四 五", "four five"),
            ("一 五 二", "一 five two"),
        ]
        .iter()
        .map(|(a, b)| (tokenize(a), tokenize(b)))
        .collect();
        let xs = Corpus::new("x", pairs.iter().map(|p| p.0.clone()).collect());
        let ys = Corpus::new("y", pairs.iter().map(|p| p.1.clone()).collect());
        let vocab = build_vocab(&[&xs, &ys], 1).unwrap();
        let cfg = Seq2SeqConfig { embed: 4, hidden: 5, layers: 1 };
        (Seq2SeqModel::new(vocab, cfg, seed).unwrap(), pairs)
    }

    #[test]
    fn batched_nll_equals_sum_of_pairs() {
        let (model, pairs) = tiny_model(1);
        let individual: f64 = pairs.iter().map(|(x, y)| model.nll(x, y).unwrap()).sum();
        let batched = model.batch_nll_pairs(&pairs).unwrap();
        assert!((individual - batched).abs() < 1e-9, "{individual} vs {batched}");
    }

    #[test]
    fn empty_target_scores_only_eos() {
        let (model, _) = tiny_model(2);
        let x = tokenize("一 二");
        let nll = model.nll(&x, &Sentence::default()).unwrap();
        let d = model.greedy_decode(&x, 1).unwrap();
        let dist = model
            .decode_batch(&[source_ids(&model.vocab, &x)], 1, 1.0, None, true)
            .unwrap()
            .remove(0)
            .distributions
            .unwrap();
        assert!(nll > 0.0);
        assert!((nll + dist[0][EOS].ln()).abs() < 1e-12);
        assert!(d.ids.len() <= 1);
        assert!(d.log_probs.iter().all(|l| *l <= 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            let (model, pairs) = tiny_model(seed);
            let data = encode_pairs(&model.vocab, &pairs);
            let err = grad_check_params(
                &model.params,
                |g, p| {
                    let (s, n) = model.batch_nll(g, p, &data)?;
                    g.scale(s, 1.0 / n as f64)
                },
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let (mut model, pairs) = tiny_model(3);
        let before = model.params.clone();
        let report = train(&mut model, &pairs, &TrainConfig { epochs: 3, lr: 0.0, ..TrainConfig::default() }).unwrap();
        assert_eq!(model.params, before);
        assert!(report.epoch_losses.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        assert!(train(&mut model, &[], &TrainConfig::default()).is_err());
    }

    #[test]
    fn temperature_limit_is_greedy() {
        let (mut model, pairs) = tiny_model(4);
        train(&mut model, &pairs, &TrainConfig { epochs: 20, batch: 3, lr: 0.02, ..TrainConfig::default() }).unwrap();
        for (x, _) in &pairs {
            let greedy = model.greedy_decode(x, 10).unwrap();
            let cold = model.sample_decode(x, 10, 1e-6, 99).unwrap();
            assert_eq!(greedy.ids, cold.ids);
        }
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let (model, _) = tiny_model(5);
        let bad = vec![(vec![999, EOS], vec![BOS], vec![EOS])];
        assert!(matches!(model.nll_ids(&bad), Err(Error::IdOutOfRange { id: 999, .. })));
    }

    #[test]
    fn checkpoint_round_trip() {
        let (model, pairs) = tiny_model(6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s2s.json");
        model.checkpoint().save(&path).unwrap();
        let back = Seq2SeqModel::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
        assert_eq!(back.params, model.params);
        assert_eq!(back.nll(&pairs[0].0, &pairs[0].1).unwrap(), model.nll(&pairs[0].0, &pairs[0].1).unwrap());
    }
}
