//! Shared oracles for the integration and acceptance tests.
#![allow(dead_code)]

use codeswitch::cmi::CmiScore;
use codeswitch::corpus::{build_vocab, Corpus, Sentence};
use codeswitch::cyclegan::{BoundModel, CycleGanModel, DiscriminatorConfig, Lambdas};
use codeswitch::nn::{grad_check, grad_check_params, Embedding, Graph, Label, Linear, LstmCell, Params, Tensor};
use codeswitch::rng::{substream_indexed, Rng};
use codeswitch::seq2seq::{source_ids, Seq2SeqConfig};
use rand::Rng as _;

pub const H: f64 = 1e-5;

fn random(rng: &mut Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Fixed random weights so that every scalar objective depends on every
/// output coordinate differently.
fn weighted_sum(g: &mut Graph, v: codeswitch::nn::Var, rng: &mut Rng) -> codeswitch::Result<codeswitch::nn::Var> {
    let t = g.value(v).clone();
    let w = g.constant(random(rng, t.rows(), t.cols()));
    let m = g.mul(v, w)?;
    g.sum(m)
}

/// Max relative finite-difference error of every primitive, loss and layer
/// on random small shapes drawn from `seed`.
pub fn layer_gradient_errors(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = substream_indexed(seed, "grad-suite", 0);
    let r = rng.gen_range(1..=8);
    let c = rng.gen_range(1..=8);
    let k = rng.gen_range(1..=8);
    let a = random(&mut rng, r, c);
    let b = random(&mut rng, r, c);
    let bk = random(&mut rng, c, k);
    let row = random(&mut rng, 1, c);
    let mut out = Vec::new();
    let mut check = |name: &'static str, f: &dyn Fn(&mut Graph, codeswitch::nn::Var) -> codeswitch::Result<codeswitch::nn::Var>, theta: &Tensor| {
        out.push((name, grad_check(f, theta, H).unwrap()));
    };
    let wseed = seed ^ 0x5eed;
    let ws = |g: &mut Graph, v| weighted_sum(g, v, &mut substream_indexed(wseed, "w", 0));

    check("matmul", &|g, x| {
        let y = g.constant(bk.clone());
        let m = g.matmul(x, y)?;
        ws(g, m)
    }, &a);
    check("matmul-rhs", &|g, y| {
        let x = g.constant(a.clone());
        let m = g.matmul(x, y)?;
        ws(g, m)
    }, &bk);
    check("add", &|g, x| {
        let y = g.constant(b.clone());
        let m = g.add(x, y)?;
        ws(g, m)
    }, &a);
    check("sub", &|g, x| {
        let y = g.constant(b.clone());
        let m = g.sub(y, x)?;
        ws(g, m)
    }, &a);
    check("mul", &|g, x| {
        let y = g.constant(b.clone());
        let m = g.mul(x, y)?;
        let m = g.mul(m, x)?;
        ws(g, m)
    }, &a);
    check("add_row", &|g, bias| {
        let x = g.constant(a.clone());
        let m = g.add_row(x, bias)?;
        ws(g, m)
    }, &row);
    check("scale", &|g, x| {
        let m = g.scale(x, -1.7)?;
        ws(g, m)
    }, &a);
    check("sigmoid", &|g, x| {
        let m = g.sigmoid(x)?;
        ws(g, m)
    }, &a);
    check("tanh", &|g, x| {
        let m = g.tanh(x)?;
        ws(g, m)
    }, &a);
    check("softmax", &|g, x| {
        let m = g.softmax(x)?;
        ws(g, m)
    }, &a);
    check("log_softmax", &|g, x| {
        let m = g.log_softmax(x)?;
        ws(g, m)
    }, &a);
    let ids: Vec<usize> = (0..k).map(|i| (i * 7 + seed as usize) % r).collect();
    check("gather", &|g, table| {
        let m = g.gather(table, &ids)?;
        ws(g, m)
    }, &a);
    check("concat", &|g, x| {
        let y = g.constant(b.clone());
        let m = g.concat(&[y, x, y])?;
        ws(g, m)
    }, &a);
    let start = c / 3;
    let len = (c - start).max(1);
    check("slice", &|g, x| {
        let m = g.slice(x, start, len)?;
        ws(g, m)
    }, &a);
    let mask: Vec<bool> = (0..r).map(|i| (i + seed as usize).is_multiple_of(2)).collect();
    check("select_rows", &|g, x| {
        let y = g.constant(b.clone());
        let m = g.select_rows(&mask, x, y)?;
        let n = g.select_rows(&mask, y, x)?;
        let m = g.mul(m, n)?;
        ws(g, m)
    }, &a);
    check("sum", &|g, x| {
        let s = g.sigmoid(x)?;
        g.sum(s)
    }, &a);
    check("mean", &|g, x| {
        let s = g.tanh(x)?;
        g.mean(s)
    }, &a);
    let targets: Vec<usize> = (0..r).map(|i| (i * 5 + 1) % c).collect();
    let ignore = if c > 1 { Some(targets[0]) } else { None };
    check("cross_entropy", &|g, x| g.cross_entropy(x, &targets, ignore), &a);
    check("cross_entropy_sum", &|g, x| g.cross_entropy_sum(x, &targets, None), &a);
    // Keep every coordinate away from the kink of |a - b|.
    let far = b.map(|v| if v >= 0.0 { v + 2.5 } else { v - 2.5 });
    check("l1", &|g, x| {
        let y = g.constant(far.clone());
        g.l1_loss(x, y)
    }, &a);
    let logits = a.map(|v| 3.0 * v);
    check("bce-real", &|g, x| g.binary_adversarial_loss(x, Label::Real), &logits);
    check("bce-fake", &|g, x| g.binary_adversarial_loss(x, Label::Fake), &logits);

    // Layers, through their parameter stores.
    let mut init = substream_indexed(seed, "grad-suite", 1);
    let (vocab, dim, hidden, batch) = (c + 2, k, r.min(5), 3);
    let mut params = Params::new();
    let emb = Embedding::new(&mut params, "emb", vocab, dim, &mut init);
    let lin = Linear::new(&mut params, "lin", hidden, vocab, &mut init);
    let cell = LstmCell::new(&mut params, "cell", dim, hidden, &mut init);
    let ids: Vec<usize> = (0..batch).map(|i| (i * 3 + seed as usize) % vocab).collect();
    let probs = {
        let raw = random(&mut init, batch, vocab);
        let exp = raw.map(f64::exp);
        let rows: Vec<Vec<f64>> = (0..batch)
            .map(|i| {
                let s: f64 = exp.row(i).iter().sum();
                exp.row(i).iter().map(|v| v / s).collect()
            })
            .collect();
        Tensor::from_rows(&rows).unwrap()
    };
    let targets: Vec<usize> = (0..batch).map(|i| (i * 5 + 2) % vocab).collect();
    let layer = grad_check_params(
        &params,
        |g, p| {
            let x1 = emb.lookup(g, p, &ids)?;
            let pr = g.constant(probs.clone());
            let x2 = emb.soft(g, p, pr)?;
            let s0 = cell.zero_state(g, batch);
            let s1 = cell.step(g, p, x1, s0)?;
            let s2 = cell.step_masked(g, p, x2, s1, &[true, false, true])?;
            let logits = lin.forward(g, p, s2.h)?;
            let ce = g.cross_entropy(logits, &targets, None)?;
            let c = g.mean(s2.c)?;
            g.add(ce, c)
        },
        H,
    )
    .unwrap();
    out.push(("embedding+lstm+linear", layer));
    out
}

/// Tiny CycleGAN with two short batches, for gradient and isolation checks.
pub fn tiny_cyclegan(seed: u64, lambdas: Lambdas) -> (CycleGanModel, Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let xs = Corpus::from_lines("x", &["一 二 三", "四 五"]);
    let ys = Corpus::from_lines("y", &["one 二", "four five 三"]);
    let vocab = build_vocab(&[&xs, &ys], 1).unwrap();
    let cfg = Seq2SeqConfig { embed: 3, hidden: 4, layers: 1 };
    let d = DiscriminatorConfig { embed: 3, hidden: 3 };
    let mut model = CycleGanModel::new(vocab, cfg, d, lambdas, seed).unwrap();
    model.settings.extra_len = 1;
    model.settings.temperature = 1.0;
    let bx = xs.iter().map(|s| source_ids(model.vocab(), s)).collect();
    let by = ys.iter().map(|s| source_ids(model.vocab(), s)).collect();
    (model, bx, by)
}

/// Max relative error of the full generator objective with respect to the
/// parameters of `G` and of `F`.
pub fn composed_gradient_error(seed: u64) -> f64 {
    let mut rng = substream_indexed(seed, "lambdas", 0);
    let lambdas = Lambdas { lambda1: rng.gen_range(0.0..1.0), lambda2: rng.gen_range(0.0..1.0) };
    let (model, bx, by) = tiny_cyclegan(seed, lambdas);
    let mut worst = 0.0f64;
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
            H,
        )
        .unwrap();
        worst = worst.max(err);
    }
    worst
}

/// Brute-force CMI: counts by scanning surfaces with their own script
/// rules, then the correctly rounded value of the exact rational
/// `100 * (1 - max / (n - u))`.
pub fn brute_cmi(s: &Sentence) -> f64 {
    let (mut n, mut u, mut a, mut b) = (0u64, 0u64, 0u64, 0u64);
    for t in &s.tokens {
        n += 1;
        let w = t.surface();
        if (w.starts_with('(') && w.ends_with(')')) || (w.starts_with('[') && w.ends_with(']')) {
            u += 1;
        } else if w.chars().any(|ch| ('\u{4e00}'..='\u{9fff}').contains(&ch)) {
            a += 1;
        } else {
            b += 1;
        }
    }
    if n == u {
        return 0.0;
    }
    let verbal = n - u;
    let max = a.max(b);
    (100 * (verbal - max)) as f64 / verbal as f64
}

/// Random tagged sentence of up to 40 tokens.
pub fn random_sentence(rng: &mut Rng) -> Sentence {
    let len = rng.gen_range(0..=40);
    let words: Vec<String> = (0..len)
        .map(|_| match rng.gen_range(0..10) {
            0 => "(laugh)".to_string(),
            1 => "[noise]".to_string(),
            2..=5 => char::from_u32(0x4e00 + rng.gen_range(0..200)).unwrap().to_string(),
            _ => ["ok", "then", "lah", "meeting", "can"][rng.gen_range(0..5)].to_string(),
        })
        .collect();
    Sentence::from_surfaces(&words)
}

pub fn score(n: usize, u: usize, d: usize) -> f64 {
    CmiScore::from_counts(n, u, d).value
}
