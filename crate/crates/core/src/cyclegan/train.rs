use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{ids_of, CycleGanModel, LossReport};
use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, AdamConfig, AdamState, Bound, Graph, Label, Params, Tensor};
use crate::rng;
use crate::seq2seq::DecodeMode;

/// How generated samples are shown to a discriminator during its own
/// update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FakeInput {
    /// The generator's per-step distributions, as in the generator step.
    Soft,
    /// Greedy token sequences.
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleGanTrainConfig {
    pub steps: usize,
    pub d_steps_per_g: usize,
    pub batch: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub clip: f64,
    pub fake_input: FakeInput,
    pub seed: u64,
    pub checkpoint_every: Option<usize>,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for CycleGanTrainConfig {
    fn default() -> Self {
        CycleGanTrainConfig {
            steps: 2000,
            d_steps_per_g: 1,
            batch: 16,
            lr_g: 1e-3,
            lr_d: 1e-4,
            clip: 5.0,
            fake_input: FakeInput::Soft,
            seed: 0,
            checkpoint_every: None,
            checkpoint_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscReport {
    pub loss: f64,
    /// Fraction of real and fake samples on the correct side of zero.
    pub accuracy: f64,
}

/// Adam states of the four networks, kept across steps.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub g: AdamState,
    pub f: AdamState,
    pub d_x: AdamState,
    pub d_y: AdamState,
}

impl Optimizers {
    pub fn new(model: &CycleGanModel, lr_g: f64, lr_d: f64) -> Self {
        Optimizers {
            g: AdamState::new(&model.g.params, AdamConfig::with_lr(lr_g)),
            f: AdamState::new(&model.f.params, AdamConfig::with_lr(lr_g)),
            d_x: AdamState::new(&model.d_x.params, AdamConfig::with_lr(lr_d)),
            d_y: AdamState::new(&model.d_y.params, AdamConfig::with_lr(lr_d)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    X,
    Y,
}

fn collect_grads(grads: &mut crate::nn::Gradients, bound: &Bound, params: &Params) -> Vec<Tensor> {
    bound
        .vars()
        .iter()
        .zip(params.tensors())
        .map(|(v, t)| grads.take(*v).unwrap_or_else(|| Tensor::zeros_like(t)))
        .collect()
}

fn accuracy(real: &Tensor, fake: &Tensor) -> f64 {
    let hits = real.data().iter().filter(|z| **z > 0.0).count() + fake.data().iter().filter(|z| **z < 0.0).count();
    hits as f64 / (real.len() + fake.len()) as f64
}

/// Updates the discriminator of `domain` on `real` samples of that domain
/// against fakes made by the opposite generator from `source` (a batch of
/// the other domain). Only that discriminator's parameters change.
pub fn discriminator_step(
    model: &mut CycleGanModel,
    opt: &mut Optimizers,
    domain: Domain,
    real: &[&Sentence],
    source: &[&Sentence],
    fake_input: FakeInput,
    clip: f64,
) -> Result<DiscReport> {
    if real.is_empty() || source.is_empty() {
        return Err(Error::Data("discriminator step needs non-empty batches".into()));
    }
    let vocab = model.vocab().clone();
    let real_ids = ids_of(&vocab, real);
    let source_ids = ids_of(&vocab, source);
    let (gen, disc) = match domain {
        Domain::Y => (&model.g, &model.d_y),
        Domain::X => (&model.f, &model.d_x),
    };

    let mut g = Graph::new();
    let pd = g.bind(&disc.params, true);
    let real_logits = disc.forward_hard(&mut g, &pd, &real_ids)?;
    let fake_logits = match fake_input {
        FakeInput::Soft => {
            let pg = g.bind(&gen.params, false);
            let soft = model.translate_soft(&mut g, gen, &pg, &source_ids)?;
            disc.forward_soft(&mut g, &pd, &soft)?
        }
        FakeInput::Hard => {
            let max_len = source_ids.iter().map(Vec::len).max().unwrap_or(1) + model.settings.extra_len;
            let decoded = gen.decode_batch(&source_ids, max_len, 1.0, None, false)?;
            let fakes: Vec<Vec<usize>> = decoded
                .into_iter()
                .map(|d| {
                    let mut ids = d.ids;
                    ids.push(crate::corpus::EOS);
                    ids
                })
                .collect();
            disc.forward_hard(&mut g, &pd, &fakes)?
        }
    };
    let lr = g.binary_adversarial_loss(real_logits, Label::Real)?;
    let lf = g.binary_adversarial_loss(fake_logits, Label::Fake)?;
    let loss = g.add(lr, lf)?;
    let acc = accuracy(g.value(real_logits), g.value(fake_logits));
    let mut grads = g.backward(loss)?;
    let (disc, state) = match domain {
        Domain::Y => (&mut model.d_y, &mut opt.d_y),
        Domain::X => (&mut model.d_x, &mut opt.d_x),
    };
    let mut gs = collect_grads(&mut grads, &pd, &disc.params);
    clip_global_norm(&mut gs, clip);
    state.update(&mut disc.params, &gs)?;
    Ok(DiscReport {
        loss: g.scalar(loss),
        accuracy: acc,
    })
}

/// One joint update of `G` and `F` on the full objective. Discriminator
/// parameters are read but never written.
pub fn generator_step(
    model: &mut CycleGanModel,
    opt: &mut Optimizers,
    batch_x: &[&Sentence],
    batch_y: &[&Sentence],
    clip: f64,
) -> Result<LossReport> {
    if batch_x.is_empty() || batch_y.is_empty() {
        return Err(Error::Data("generator step needs non-empty batches".into()));
    }
    let vocab = model.vocab().clone();
    let bx = ids_of(&vocab, batch_x);
    let by = ids_of(&vocab, batch_y);
    let mut g = Graph::new();
    let b = model.bind(&mut g, true, false);
    let v = model.generator_objective(&mut g, &b, &bx, &by)?;
    let report = LossReport {
        adv_g: g.scalar(v.adv_g),
        adv_f: g.scalar(v.adv_f),
        cyc_x: g.scalar(v.cyc_x),
        cyc_y: g.scalar(v.cyc_y),
        disc_x: f64::NAN,
        disc_y: f64::NAN,
        total: g.scalar(v.total),
    };
    let mut grads = g.backward(v.total)?;
    let mut gg = collect_grads(&mut grads, &b.g, &model.g.params);
    let mut gf = collect_grads(&mut grads, &b.f, &model.f.params);
    clip_global_norm(&mut gg, clip);
    clip_global_norm(&mut gf, clip);
    opt.g.update(&mut model.g.params, &gg)?;
    opt.f.update(&mut model.f.params, &gf)?;
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub reports: Vec<LossReport>,
    /// `(D_X, D_Y)` accuracy of the last discriminator step before each
    /// generator step.
    pub disc_accuracy: Vec<(f64, f64)>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LossReport::CSV_HEADER);
        out.push('\n');
        for (i, r) in self.reports.iter().enumerate() {
            out.push_str(&r.csv_row(i + 1));
            out.push('\n');
        }
        out
    }

    /// Mean discriminator accuracy (both domains) over the last `fraction`
    /// of steps.
    pub fn tail_disc_accuracy(&self, fraction: f64) -> f64 {
        let n = self.disc_accuracy.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        let tail = &self.disc_accuracy[n.saturating_sub(k)..];
        tail.iter().map(|(a, b)| (a + b) / 2.0).sum::<f64>() / tail.len().max(1) as f64
    }
}

/// Alternates `d_steps_per_g` discriminator updates (both domains) with one
/// generator update, for `steps` generator updates. Batches are drawn
/// uniformly with replacement from the `cyclegan:batches` substream.
pub fn train(
    model: &mut CycleGanModel,
    corpus_x: &Corpus,
    corpus_y: &Corpus,
    config: &CycleGanTrainConfig,
) -> Result<TrainLog> {
    if corpus_x.is_empty() || corpus_y.is_empty() {
        return Err(Error::Data("CycleGAN training needs non-empty corpora".into()));
    }
    if config.batch == 0 {
        return Err(Error::Config("batch must be at least 1".into()));
    }
    let mut opt = Optimizers::new(model, config.lr_g, config.lr_d);
    let mut batches = rng::substream(config.seed, "cyclegan:batches");
    let mut log = TrainLog::default();
    for step in 1..=config.steps {
        let (mut dx, mut dy) = (
            DiscReport { loss: f64::NAN, accuracy: f64::NAN },
            DiscReport { loss: f64::NAN, accuracy: f64::NAN },
        );
        for _ in 0..config.d_steps_per_g {
            let bx = corpus_x.sample(&mut batches, config.batch);
            let by = corpus_y.sample(&mut batches, config.batch);
            dy = discriminator_step(model, &mut opt, Domain::Y, &by, &bx, config.fake_input, config.clip)?;
            dx = discriminator_step(model, &mut opt, Domain::X, &bx, &by, config.fake_input, config.clip)?;
        }
        let bx = corpus_x.sample(&mut batches, config.batch);
        let by = corpus_y.sample(&mut batches, config.batch);
        let mut report = generator_step(model, &mut opt, &bx, &by, config.clip)?;
        report.disc_x = dx.loss;
        report.disc_y = dy.loss;
        log.reports.push(report);
        log.disc_accuracy.push((dx.accuracy, dy.accuracy));
        if step % 100 == 0 {
            log::debug!(
                "step {step}: total {:.4} cyc_x {:.4} cyc_y {:.4} acc {:.2}/{:.2}",
                report.total,
                report.cyc_x,
                report.cyc_y,
                dx.accuracy,
                dy.accuracy
            );
        }
        if let (Some(every), Some(dir)) = (config.checkpoint_every, config.checkpoint_dir.as_ref()) {
            if every > 0 && step % every == 0 {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                model.checkpoint().save(dir.join(format!("cyclegan-step{step}.json")))?;
            }
        }
    }
    Ok(log)
}

/// Token-level accuracy of `F(G(x))` against `x`, both legs greedy:
/// position-wise matches over the total length of the originals.
pub fn cycle_accuracy(model: &CycleGanModel, corpus_x: &Corpus) -> Result<f64> {
    let forward = model.g.translate(corpus_x, DecodeMode::Greedy, 64, "fwd")?;
    let back = model.f.translate(&forward, DecodeMode::Greedy, 64, "back")?;
    let (mut hits, mut total) = (0usize, 0usize);
    for (x, r) in corpus_x.iter().zip(&back) {
        total += x.len();
        hits += x.tokens.iter().zip(&r.tokens).filter(|(a, b)| a == b).count();
    }
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

/// Applies `G` to every sentence; tags come from the output surfaces.
pub fn generate(model: &CycleGanModel, corpus_x: &Corpus, mode: DecodeMode) -> Result<Corpus> {
    model.g.translate(corpus_x, mode, 64, "generated")
}
