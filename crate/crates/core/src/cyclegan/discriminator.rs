use serde::{Deserialize, Serialize};

use crate::corpus::PAD;
use crate::error::{Error, Result};
use crate::nn::{Bound, Embedding, Graph, Linear, LstmCell, Params, Var};
use crate::rng;
use crate::seq2seq::{time_major, SoftStep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscriminatorConfig {
    pub embed: usize,
    pub hidden: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig { embed: 32, hidden: 32 }
    }
}

/// Recurrent sequence classifier: embedding, one LSTM, and a linear head on
/// the last valid hidden state. A positive logit means "real".
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    pub params: Params,
    embed: Embedding,
    cell: LstmCell,
    head: Linear,
}

impl Discriminator {
    pub fn new(vocab_size: usize, config: DiscriminatorConfig, seed: u64, name: &str) -> Result<Self> {
        if config.embed == 0 || config.hidden == 0 {
            return Err(Error::Config("discriminator dimensions must be positive".into()));
        }
        let mut params = Params::new();
        let embed = Embedding::new(&mut params, "embed", vocab_size, config.embed, &mut rng::substream(seed, &format!("init:{name}-embed")));
        let cell = LstmCell::new(&mut params, "lstm", config.embed, config.hidden, &mut rng::substream(seed, &format!("init:{name}-lstm")));
        let head = Linear::new(&mut params, "head", config.hidden, 1, &mut rng::substream(seed, &format!("init:{name}-head")));
        Ok(Discriminator {
            config,
            params,
            embed,
            cell,
            head,
        })
    }

    /// Logits (`batch x 1`) for hard id sequences.
    pub fn forward_hard(&self, g: &mut Graph, p: &Bound, seqs: &[Vec<usize>]) -> Result<Var> {
        let (ids, masks) = time_major(seqs);
        let mut state = self.cell.zero_state(g, seqs.len());
        for (step, mask) in ids.iter().zip(&masks) {
            debug_assert!(step.iter().zip(mask).all(|(id, m)| *m || *id == PAD));
            let x = self.embed.lookup(g, p, step)?;
            state = self.cell.step_masked(g, p, x, state, mask)?;
        }
        self.head.forward(g, p, state.h)
    }

    /// Logits for soft sequences, reading expected embeddings.
    pub fn forward_soft(&self, g: &mut Graph, p: &Bound, steps: &[SoftStep]) -> Result<Var> {
        let batch = steps
            .first()
            .map(|s| s.mask.len())
            .ok_or_else(|| Error::Data("empty soft sequence".into()))?;
        let mut state = self.cell.zero_state(g, batch);
        for step in steps {
            let x = self.embed.soft(g, p, step.probs)?;
            state = self.cell.step_masked(g, p, x, state, &step.mask)?;
        }
        self.head.forward(g, p, state.h)
    }
}
