use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate, train, CycleGanModel, CycleGanTrainConfig, Lambdas};
use crate::corpus::{Corpus, Sentence, Vocabulary, RESERVED};
use crate::error::{Error, Result};
use crate::lm::{lm_vocab, perplexity, train_lm, LmConfig};
use crate::seq2seq::DecodeMode;

pub const DEFAULT_LAMBDA1_GRID: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
pub const DEFAULT_LAMBDA2_GRID: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub train: CycleGanTrainConfig,
    pub lm: LmConfig,
    pub decode: DecodeMode,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambda1: DEFAULT_LAMBDA1_GRID.to_vec(),
            lambda2: DEFAULT_LAMBDA2_GRID.to_vec(),
            train: CycleGanTrainConfig::default(),
            lm: LmConfig::default(),
            decode: DecodeMode::Greedy,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub dev_ppl: f64,
    pub generated_sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Row-major, one row per `lambda2` value.
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn get(&self, lambda1: f64, lambda2: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.lambda1 == lambda1 && c.lambda2 == lambda2)
    }

    pub fn best(&self) -> Option<&SweepCell> {
        self.cells.iter().min_by(|a, b| a.dev_ppl.total_cmp(&b.dev_ppl))
    }

    /// `lambda1,lambda2,dev_ppl` in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda1,lambda2,dev_ppl\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{:.4}\n", c.lambda1, c.lambda2, c.dev_ppl));
        }
        out
    }

    /// Dev perplexity grid: `lambda2` down, `lambda1` across.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:>7}", "l2\\l1");
        for l1 in &self.lambda1 {
            out.push_str(&format!(" {:>9.2}", l1));
        }
        out.push('\n');
        for (r, l2) in self.lambda2.iter().enumerate() {
            out.push_str(&format!("{:>7.2}", l2));
            for c in &self.cells[r * self.lambda1.len()..(r + 1) * self.lambda1.len()] {
                out.push_str(&format!(" {:>9.2}", c.dev_ppl));
            }
            out.push('\n');
        }
        out
    }
}

/// LM vocabulary covering the base and dev text and every generator
/// output word, so all cells score against the same units.
pub fn sweep_vocab(vocab: &Vocabulary, base: &Corpus, dev: &Corpus, lm: &LmConfig) -> Result<Vocabulary> {
    let words = Corpus::new(
        "generator-vocab",
        vocab
            .words()
            .iter()
            .skip(RESERVED)
            .map(|w| Sentence::from_surfaces(&[w.as_str()]))
            .collect(),
    );
    lm_vocab(&[base, dev, &words], lm.unit)
}

/// Trains one CycleGAN per `(lambda1, lambda2)` cell, each starting from
/// `pretrained` with the same training seed, generates from `source`, and
/// scores an LM trained on `base` plus the generated text on `dev`.
pub fn lambda_sweep(
    pretrained: &CycleGanModel,
    corpus_x: &Corpus,
    corpus_y: &Corpus,
    source: &Corpus,
    base: &Corpus,
    dev: &Corpus,
    config: &SweepConfig,
) -> Result<SweepTable> {
    if config.lambda1.is_empty() || config.lambda2.is_empty() {
        return Err(Error::Config("lambda grids must be non-empty".into()));
    }
    let grid: Vec<Lambdas> = config
        .lambda2
        .iter()
        .flat_map(|&lambda2| config.lambda1.iter().map(move |&lambda1| Lambdas { lambda1, lambda2 }))
        .collect();
    for l in &grid {
        l.validate()?;
    }
    let vocab = sweep_vocab(pretrained.vocab(), base, dev, &config.lm)?;
    let run = |l: &Lambdas| -> Result<SweepCell> {
        let mut model = pretrained.clone();
        model.lambdas = *l;
        train(&mut model, corpus_x, corpus_y, &config.train)?;
        let generated = generate(&model, source, config.decode)?;
        let (lm, _) = train_lm(&base.concat(&generated), Some(vocab.clone()), &config.lm)?;
        Ok(SweepCell {
            lambda1: l.lambda1,
            lambda2: l.lambda2,
            dev_ppl: perplexity(&lm, dev)?.ppl,
            generated_sentences: generated.len(),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells: Vec<SweepCell> = pool.install(|| grid.par_iter().map(run).collect::<Result<_>>())?;
    Ok(SweepTable {
        lambda1: config.lambda1.clone(),
        lambda2: config.lambda2.clone(),
        cells,
    })
}
