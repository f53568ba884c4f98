//! Cycle-consistent adversarial transfer between monolingual text (domain
//! X) and code-switched text (domain Y).
//!
//! Two encoder-decoder generators, `G: X -> Y` and `F: Y -> X`, start from
//! supervised pretraining on lexicon-substituted pairs. Two recurrent
//! discriminators, `D_X` and `D_Y`, score domain membership. The generator
//! objective is
//!
//! ```text
//! L = L_adv(G, D_Y) + L_adv(F, D_X) + lambda1 * L_cyc(F(G(X))) + lambda2 * L_cyc(G(F(Y)))
//! ```
//!
//! Generated text crosses into the discriminators and the reverse
//! generator as per-step output distributions, read through expected
//! embeddings, so every term is differentiable in the generator
//! parameters. A cycle term is the teacher-forced cross-entropy of the
//! original sentence under the reverse generator, given the forward
//! generator's soft output.

mod discriminator;
mod sweep;
mod train;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, Vocabulary};
use crate::error::{Error, Result};
use crate::nn::{Bound, Checkpoint, Graph, Label, Params, Var};
use crate::seq2seq::{self, source_ids, DecodeMode, Seq2SeqConfig, Seq2SeqModel, SoftStep, TrainConfig};

pub use discriminator::{Discriminator, DiscriminatorConfig};
pub use sweep::{lambda_sweep, sweep_vocab, SweepCell, SweepConfig, SweepTable, DEFAULT_LAMBDA1_GRID, DEFAULT_LAMBDA2_GRID};
pub use train::{
    cycle_accuracy, discriminator_step, generate, generator_step, train, CycleGanTrainConfig, DiscReport,
    Domain, FakeInput, Optimizers, TrainLog,
};

/// Weights of the two cycle-consistency terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Lambdas {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for Lambdas {
    fn default() -> Self {
        Lambdas {
            lambda1: 0.3,
            lambda2: 0.8,
        }
    }
}

impl Lambdas {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 || !self.lambda1.is_finite() || !self.lambda2.is_finite() {
            return Err(Error::Config(format!(
                "cycle weights must be non-negative, got {} and {}",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }
}

/// Loss components of one generator step, plus the latest discriminator
/// losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub adv_g: f64,
    pub adv_f: f64,
    /// Reconstruction of X through `F(G(x))`.
    pub cyc_x: f64,
    /// Reconstruction of Y through `G(F(y))`.
    pub cyc_y: f64,
    pub disc_x: f64,
    pub disc_y: f64,
    pub total: f64,
}

impl LossReport {
    pub fn combine(adv_g: f64, adv_f: f64, cyc_x: f64, cyc_y: f64, lambdas: Lambdas) -> f64 {
        adv_g + adv_f + lambdas.lambda1 * cyc_x + lambdas.lambda2 * cyc_y
    }

    pub fn new(adv_g: f64, adv_f: f64, cyc_x: f64, cyc_y: f64, lambdas: Lambdas) -> Self {
        LossReport {
            adv_g,
            adv_f,
            cyc_x,
            cyc_y,
            disc_x: f64::NAN,
            disc_y: f64::NAN,
            total: Self::combine(adv_g, adv_f, cyc_x, cyc_y, lambdas),
        }
    }

    pub const CSV_HEADER: &'static str = "step,adv_G,adv_F,cyc_X,cyc_Y,disc_X,disc_Y,total";

    pub fn csv_row(&self, step: usize) -> String {
        format!(
            "{step},{},{},{},{},{},{},{}",
            self.adv_g, self.adv_f, self.cyc_x, self.cyc_y, self.disc_x, self.disc_y, self.total
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSettings {
    /// Softmax temperature of the soft decoder.
    pub temperature: f64,
    /// Extra soft-decoding steps allowed beyond the longest input.
    pub extra_len: usize,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        GeneratorSettings {
            temperature: 0.5,
            extra_len: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CycleGanModel {
    /// X -> Y.
    pub g: Seq2SeqModel,
    /// Y -> X.
    pub f: Seq2SeqModel,
    pub d_x: Discriminator,
    pub d_y: Discriminator,
    pub lambdas: Lambdas,
    pub settings: GeneratorSettings,
}

#[derive(Debug, Clone, Default)]
pub struct PretrainConfig {
    pub seq2seq: Seq2SeqConfig,
    pub discriminator: DiscriminatorConfig,
    pub train: TrainConfig,
    pub lambdas: Lambdas,
    pub settings: GeneratorSettings,
    pub seed: u64,
}

/// Graph variables of the generator objective.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveVars {
    pub adv_g: Var,
    pub adv_f: Var,
    pub cyc_x: Var,
    pub cyc_y: Var,
    pub total: Var,
}

/// Bindings of the four networks in one graph.
pub struct BoundModel {
    pub g: Bound,
    pub f: Bound,
    pub d_x: Bound,
    pub d_y: Bound,
}

impl CycleGanModel {
    /// Fresh networks over one shared vocabulary.
    pub fn new(
        vocab: Vocabulary,
        seq2seq: Seq2SeqConfig,
        discriminator: DiscriminatorConfig,
        lambdas: Lambdas,
        seed: u64,
    ) -> Result<Self> {
        lambdas.validate()?;
        let size = vocab.len();
        Ok(CycleGanModel {
            g: Seq2SeqModel::new(vocab.clone(), seq2seq, crate::rng::derive_seed(seed, "G"))?,
            f: Seq2SeqModel::new(vocab, seq2seq, crate::rng::derive_seed(seed, "F"))?,
            d_x: Discriminator::new(size, discriminator, seed, "D_X")?,
            d_y: Discriminator::new(size, discriminator, seed, "D_Y")?,
            lambdas,
            settings: GeneratorSettings::default(),
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.g.vocab
    }

    pub fn bind(&self, g: &mut Graph, generators: bool, discriminators: bool) -> BoundModel {
        BoundModel {
            g: g.bind(&self.g.params, generators),
            f: g.bind(&self.f.params, generators),
            d_x: g.bind(&self.d_x.params, discriminators),
            d_y: g.bind(&self.d_y.params, discriminators),
        }
    }

    fn soft_len(&self, src: &[Vec<usize>]) -> usize {
        src.iter().map(Vec::len).max().unwrap_or(1) + self.settings.extra_len
    }

    /// Soft output of `gen` on hard `src`.
    pub fn translate_soft(
        &self,
        graph: &mut Graph,
        gen: &Seq2SeqModel,
        p: &Bound,
        src: &[Vec<usize>],
    ) -> Result<Vec<SoftStep>> {
        let state = gen.encode(graph, p, src)?;
        gen.decode_soft(graph, p, state, self.soft_len(src), self.settings.temperature)
    }

    /// Mean teacher-forced NLL of `original` under `back` given `soft`.
    pub fn reconstruction(
        &self,
        graph: &mut Graph,
        back: &Seq2SeqModel,
        p: &Bound,
        soft: &[SoftStep],
        original: &[Vec<usize>],
    ) -> Result<Var> {
        let state = back.encode_soft(graph, p, soft)?;
        let (input, target): (Vec<_>, Vec<_>) = original
            .iter()
            .map(|src| {
                // `src` is body + EOS; rebuild the decoder framing.
                let body = &src[..src.len() - 1];
                let mut i = vec![crate::corpus::BOS];
                i.extend_from_slice(body);
                (i, src.clone())
            })
            .unzip();
        let (sum, n) = back.teacher_forced_nll(graph, p, state, &input, &target)?;
        graph.scale(sum, 1.0 / n.max(1) as f64)
    }

    /// The full generator objective on one pair of batches (id sequences
    /// ending in EOS).
    pub fn generator_objective(
        &self,
        graph: &mut Graph,
        b: &BoundModel,
        batch_x: &[Vec<usize>],
        batch_y: &[Vec<usize>],
    ) -> Result<ObjectiveVars> {
        let fake_y = self.translate_soft(graph, &self.g, &b.g, batch_x)?;
        let dy = self.d_y.forward_soft(graph, &b.d_y, &fake_y)?;
        let adv_g = graph.binary_adversarial_loss(dy, Label::Real)?;
        let cyc_x = self.reconstruction(graph, &self.f, &b.f, &fake_y, batch_x)?;

        let fake_x = self.translate_soft(graph, &self.f, &b.f, batch_y)?;
        let dx = self.d_x.forward_soft(graph, &b.d_x, &fake_x)?;
        let adv_f = graph.binary_adversarial_loss(dx, Label::Real)?;
        let cyc_y = self.reconstruction(graph, &self.g, &b.g, &fake_x, batch_y)?;

        let adv = graph.add(adv_g, adv_f)?;
        let wx = graph.scale(cyc_x, self.lambdas.lambda1)?;
        let wy = graph.scale(cyc_y, self.lambdas.lambda2)?;
        let cyc = graph.add(wx, wy)?;
        let total = graph.add(adv, cyc)?;
        Ok(ObjectiveVars {
            adv_g,
            adv_f,
            cyc_x,
            cyc_y,
            total,
        })
    }

    /// Cycle loss of X, `F(G(x))` against `x`, with current parameters.
    pub fn cycle_loss_x(&self, batch_x: &[Sentence]) -> Result<f64> {
        self.cycle_loss(batch_x, true)
    }

    /// Cycle loss of Y, `G(F(y))` against `y`.
    pub fn cycle_loss_y(&self, batch_y: &[Sentence]) -> Result<f64> {
        self.cycle_loss(batch_y, false)
    }

    fn cycle_loss(&self, batch: &[Sentence], from_x: bool) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        let ids: Vec<Vec<usize>> = batch.iter().map(|s| source_ids(self.vocab(), s)).collect();
        let (fwd, back) = if from_x { (&self.g, &self.f) } else { (&self.f, &self.g) };
        let mut graph = Graph::new();
        let pf = graph.bind(&fwd.params, false);
        let pb = graph.bind(&back.params, false);
        let soft = self.translate_soft(&mut graph, fwd, &pf, &ids)?;
        let loss = self.reconstruction(&mut graph, back, &pb, &soft, &ids)?;
        Ok(graph.scalar(loss))
    }

    /// Stores all four networks and the hyperparameters in one checkpoint.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut all = Params::new();
        for (prefix, p) in [
            ("G.", &self.g.params),
            ("F.", &self.f.params),
            ("D_X.", &self.d_x.params),
            ("D_Y.", &self.d_y.params),
        ] {
            for (name, t) in p.prefixed(prefix).iter() {
                all.add(name, t.clone());
            }
        }
        Checkpoint::new(
            "cyclegan",
            serde_json::json!({
                "seq2seq": self.g.config,
                "discriminator": self.d_x.config,
                "lambdas": self.lambdas,
                "settings": self.settings,
                "vocab": self.g.vocab,
            }),
            &all,
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("cyclegan")?;
        let meta = &ck.meta;
        let vocab: Vocabulary = serde_json::from_value(meta["vocab"].clone())?;
        let mut model = CycleGanModel::new(
            vocab,
            serde_json::from_value(meta["seq2seq"].clone())?,
            serde_json::from_value(meta["discriminator"].clone())?,
            serde_json::from_value(meta["lambdas"].clone())?,
            0,
        )?;
        model.settings = serde_json::from_value(meta["settings"].clone())?;
        let all = ck.params()?;
        let mut offset = 0;
        for p in [&mut model.g.params, &mut model.f.params, &mut model.d_x.params, &mut model.d_y.params] {
            let n = p.len();
            for i in 0..n {
                let (_, t) = all.iter().nth(offset + i).ok_or_else(|| Error::Data("checkpoint too short".into()))?;
                if t.shape() != p.tensors()[i].shape() {
                    return Err(Error::Data(format!("checkpoint tensor {} has the wrong shape", offset + i)));
                }
                p.tensors_mut()[i] = t.clone();
            }
            offset += n;
        }
        if offset != all.len() {
            return Err(Error::Data("checkpoint has extra tensors".into()));
        }
        Ok(model)
    }
}

/// Trains `G` on `pairs_xy` and `F` on `pairs_yx` with supervised NLL over a
/// vocabulary covering both; discriminators start from random weights.
pub fn pretrain(
    pairs_xy: &[(Sentence, Sentence)],
    pairs_yx: &[(Sentence, Sentence)],
    extra: &[&Corpus],
    config: &PretrainConfig,
) -> Result<(CycleGanModel, seq2seq::TrainReport, seq2seq::TrainReport)> {
    if pairs_xy.is_empty() || pairs_yx.is_empty() {
        return Err(Error::Data("pretraining needs non-empty pair lists".into()));
    }
    let side = |pairs: &[(Sentence, Sentence)], first: bool| {
        Corpus::new(
            "side",
            pairs.iter().map(|(a, b)| if first { a.clone() } else { b.clone() }).collect(),
        )
    };
    let sides = [side(pairs_xy, true), side(pairs_xy, false), side(pairs_yx, true), side(pairs_yx, false)];
    let mut corpora: Vec<&Corpus> = sides.iter().collect();
    corpora.extend_from_slice(extra);
    let vocab = crate::corpus::build_vocab(&corpora, 1)?;
    let mut model = CycleGanModel::new(vocab, config.seq2seq, config.discriminator, config.lambdas, config.seed)?;
    model.settings = config.settings;
    let train_g = TrainConfig {
        seed: crate::rng::derive_seed(config.train.seed, "pretrain:G"),
        ..config.train
    };
    let train_f = TrainConfig {
        seed: crate::rng::derive_seed(config.train.seed, "pretrain:F"),
        ..config.train
    };
    let rg = seq2seq::train(&mut model.g, pairs_xy, &train_g)?;
    let rf = seq2seq::train(&mut model.f, pairs_yx, &train_f)?;
    Ok((model, rg, rf))
}

/// Reverses `(x, y)` pairs into `(y, x)`.
pub fn reverse_pairs(pairs: &[(Sentence, Sentence)]) -> Vec<(Sentence, Sentence)> {
    pairs.iter().map(|(x, y)| (y.clone(), x.clone())).collect()
}

/// Runs the forward generator over a corpus.
pub fn translate_corpus(model: &CycleGanModel, corpus: &Corpus, mode: DecodeMode, name: &str) -> Result<Corpus> {
    model.g.translate(corpus, mode, 64, name)
}

pub(crate) fn ids_of(vocab: &Vocabulary, batch: &[&Sentence]) -> Vec<Vec<usize>> {
    batch.iter().map(|s| source_ids(vocab, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, tokenize};
    use crate::nn::grad_check_params;

    fn tiny(seed: u64, lambdas: Lambdas) -> (CycleGanModel, Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let xs = Corpus::from_lines("x", &["一 二 三", "四 五"]);
        let ys = Corpus::from_lines("y", &["one 二", "four five 三"]);
        let vocab = build_vocab(&[&xs, &ys], 1).unwrap();
        let cfg = Seq2SeqConfig { embed: 3, hidden: 4, layers: 1 };
        let d = DiscriminatorConfig { embed: 3, hidden: 3 };
        let mut model = CycleGanModel::new(vocab, cfg, d, lambdas, seed).unwrap();
        model.settings.extra_len = 1;
        let bx = xs.iter().map(|s| source_ids(model.vocab(), s)).collect();
        let by = ys.iter().map(|s| source_ids(model.vocab(), s)).collect();
        (model, bx, by)
    }

    #[test]
    fn report_identity() {
        let l = Lambdas { lambda1: 0.3, lambda2: 0.8 };
        assert!((LossReport::new(1.0, 1.0, 2.0, 3.0, l).total - 5.0).abs() < 1e-12);
        let zero = Lambdas { lambda1: 0.0, lambda2: 0.0 };
        assert_eq!(LossReport::new(0.7, 0.4, 9.0, 9.0, zero).total, 0.7 + 0.4);
        assert!(Lambdas { lambda1: -0.1, lambda2: 0.0 }.validate().is_err());
    }

    #[test]
    fn objective_total_matches_components() {
        let (model, bx, by) = tiny(1, Lambdas::default());
        let mut g = Graph::new();
        let b = model.bind(&mut g, true, false);
        let v = model.generator_objective(&mut g, &b, &bx, &by).unwrap();
        let expected = LossReport::combine(g.scalar(v.adv_g), g.scalar(v.adv_f), g.scalar(v.cyc_x), g.scalar(v.cyc_y), model.lambdas);
        assert!((g.scalar(v.total) - expected).abs() < 1e-9);
        assert!(g.scalar(v.cyc_x) >= 0.0 && g.scalar(v.cyc_y) >= 0.0);
    }

    #[test]
    fn generator_objective_gradients() {
        for seed in 0..2 {
            let (model, bx, by) = tiny(seed, Lambdas { lambda1: 0.3, lambda2: 0.8 });
            // Check G's parameters with F and the discriminators held fixed,
            // then F's.
            for which in 0..2 {
                let target = if which == 0 { &model.g.params } else { &model.f.params };
                let err = grad_check_params(
                    target,
                    |g, p| {
                        let other = if which == 0 { &model.f.params } else { &model.g.params };
                        let o = g.bind(other, false);
                        let (pg, pf) = if which == 0 { (p.clone(), o) } else { (o, p.clone()) };
                        let b = BoundModel {
                            g: pg,
                            f: pf,
                            d_x: g.bind(&model.d_x.params, false),
                            d_y: g.bind(&model.d_y.params, false),
                        };
                        Ok(model.generator_objective(g, &b, &bx, &by)?.total)
                    },
                    1e-5,
                )
                .unwrap();
                assert!(err < 1e-3, "seed {seed} net {which}: {err}");
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let (model, _, _) = tiny(3, Lambdas { lambda1: 0.1, lambda2: 0.9 });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cg.json");
        model.checkpoint().save(&path).unwrap();
        let back = CycleGanModel::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
        assert_eq!(back.g.params, model.g.params);
        assert_eq!(back.d_y.params, model.d_y.params);
        assert_eq!(back.lambdas, model.lambdas);
        assert_eq!(back.settings, model.settings);
    }

    #[test]
    fn cycle_losses_are_non_negative() {
        let (model, _, _) = tiny(4, Lambdas::default());
        let x = [tokenize("一 二")];
        assert!(model.cycle_loss_x(&x).unwrap() >= 0.0);
        assert!(model.cycle_loss_y(&[tokenize("one two")]).unwrap() >= 0.0);
        assert!(model.cycle_loss_x(&[]).is_err());
    }
}
