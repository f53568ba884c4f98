use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::params::{Bound, ParamId, Params};
use super::tensor::Tensor;
use crate::error::Result;
use crate::rng::Rng;

fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut Rng) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::matrix(rows, cols, data).expect("shape")
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Embedding {
    pub table: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new(params: &mut Params, name: &str, vocab: usize, dim: usize, rng: &mut Rng) -> Self {
        let table = params.add(format!("{name}.table"), uniform(vocab, dim, 0.1, rng));
        Embedding { table, vocab, dim }
    }

    pub fn lookup(&self, g: &mut Graph, p: &Bound, ids: &[usize]) -> Result<Var> {
        g.gather(p.var(self.table), ids)
    }

    /// Expected embedding under per-row distributions over the vocabulary.
    pub fn soft(&self, g: &mut Graph, p: &Bound, probs: Var) -> Result<Var> {
        g.matmul(probs, p.var(self.table))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new(params: &mut Params, name: &str, input: usize, output: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let weight = params.add(format!("{name}.weight"), uniform(input, output, bound, rng));
        let bias = params.add(format!("{name}.bias"), Tensor::zeros(1, output));
        Linear { weight, bias }
    }

    pub fn forward(&self, g: &mut Graph, p: &Bound, x: Var) -> Result<Var> {
        let y = g.matmul(x, p.var(self.weight))?;
        g.add_row(y, p.var(self.bias))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

/// LSTM cell with input, forget, candidate and output gates packed into one
/// `(input + hidden) x 4*hidden` weight.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LstmCell {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(params: &mut Params, name: &str, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let weight = params.add(
            format!("{name}.weight"),
            uniform(input + hidden, 4 * hidden, bound, rng),
        );
        let mut b = Tensor::zeros(1, 4 * hidden);
        // Forget gate starts open.
        for v in &mut b.data_mut()[hidden..2 * hidden] {
            *v = 1.0;
        }
        let bias = params.add(format!("{name}.bias"), b);
        LstmCell {
            weight,
            bias,
            input,
            hidden,
        }
    }

    pub fn zero_state(&self, g: &mut Graph, batch: usize) -> LstmState {
        LstmState {
            h: g.constant(Tensor::zeros(batch, self.hidden)),
            c: g.constant(Tensor::zeros(batch, self.hidden)),
        }
    }

    pub fn step(&self, g: &mut Graph, p: &Bound, x: Var, state: LstmState) -> Result<LstmState> {
        let h = self.hidden;
        let xh = g.concat(&[x, state.h])?;
        let z = g.matmul(xh, p.var(self.weight))?;
        let z = g.add_row(z, p.var(self.bias))?;
        let i = g.slice(z, 0, h)?;
        let i = g.sigmoid(i)?;
        let f = g.slice(z, h, h)?;
        let f = g.sigmoid(f)?;
        let cand = g.slice(z, 2 * h, h)?;
        let cand = g.tanh(cand)?;
        let o = g.slice(z, 3 * h, h)?;
        let o = g.sigmoid(o)?;
        let keep = g.mul(f, state.c)?;
        let write = g.mul(i, cand)?;
        let c = g.add(keep, write)?;
        let tc = g.tanh(c)?;
        let h = g.mul(o, tc)?;
        Ok(LstmState { h, c })
    }

    /// Step that only advances rows where `mask` is set; other rows carry
    /// their previous state through unchanged.
    pub fn step_masked(
        &self,
        g: &mut Graph,
        p: &Bound,
        x: Var,
        state: LstmState,
        mask: &[bool],
    ) -> Result<LstmState> {
        let next = self.step(g, p, x, state)?;
        if mask.iter().all(|m| *m) {
            return Ok(next);
        }
        Ok(LstmState {
            h: g.select_rows(mask, next.h, state.h)?,
            c: g.select_rows(mask, next.c, state.c)?,
        })
    }
}
