use super::tensor::{matmul_at_into, matmul_bt_into, Tensor};
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Target of a binary adversarial loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    fn value(self) -> f64 {
        match self {
            Label::Real => 1.0,
            Label::Fake => 0.0,
        }
    }
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Gather(Var, Vec<usize>),
    Concat(Vec<Var>),
    Slice(Var, usize),
    SelectRows(Vec<bool>, Var, Var),
    Sum(Var),
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        ignore: Option<usize>,
        probs: Tensor,
        scale: f64,
    },
    L1(Var, Var),
    Bce(Var, f64),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Recording of one forward computation.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node that needed one.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of `v`, or zeros shaped like `like` if nothing flowed to it.
    pub fn get_or_zeros(&self, v: Var, like: &Tensor) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros_like(like))
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn softmax_rows(x: &Tensor) -> Tensor {
    let (r, c) = (x.rows(), x.cols());
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        let row = x.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        let mut total = 0.0;
        for v in row {
            let e = (v - max).exp();
            total += e;
            out.push(e);
        }
        for v in &mut out[start..] {
            *v /= total;
        }
    }
    Tensor::matrix(r, c, out).expect("shape preserved")
}

fn log_softmax_rows(x: &Tensor) -> Tensor {
    let (r, c) = (x.rows(), x.cols());
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        let row = x.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        out.extend(row.iter().map(|v| v - lse));
    }
    Tensor::matrix(r, c, out).expect("shape preserved")
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| f(*x, *y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("shape preserved")
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op, inputs: &[Var]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (x, y) = (self.value(a), self.value(b));
        if x.same_shape(y) {
            Ok(())
        } else {
            Err(Error::shape(
                op,
                format!("{}x{} vs {}x{}", x.rows(), x.cols(), y.rows(), y.cols()),
            ))
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        self.push("matmul", out, Op::MatMul(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x + y);
        self.push("add", out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x - y);
        self.push("sub", out, Op::Sub(a, b), &[a, b])
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push("mul", out, Op::Mul(a, b), &[a, b])
    }

    /// Adds the `1 x n` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(bias));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(Error::shape(
                "add_row",
                format!("bias {}x{} for {} columns", b.rows(), b.cols(), x.cols()),
            ));
        }
        let c = x.cols();
        let data = x
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| v + b.data()[i % c])
            .collect();
        let out = Tensor::matrix(x.rows(), c, data)?;
        self.push("add_row", out, Op::AddRow(a, bias), &[a, bias])
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let out = self.value(a).map(|v| v * k);
        self.push("scale", out, Op::Scale(a, k), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push("sigmoid", out, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        self.push("tanh", out, Op::Tanh(a), &[a])
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let out = softmax_rows(self.value(a));
        self.push("softmax", out, Op::Softmax(a), &[a])
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let out = log_softmax_rows(self.value(a));
        self.push("log_softmax", out, Op::LogSoftmax(a), &[a])
    }

    /// Rows of `table` selected by `ids` (embedding lookup).
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = self.value(table);
        let (v, e) = (t.rows(), t.cols());
        let mut data = Vec::with_capacity(ids.len() * e);
        for &id in ids {
            if id >= v {
                return Err(Error::IdOutOfRange { id, size: v });
            }
            data.extend_from_slice(t.row(id));
        }
        let out = Tensor::matrix(ids.len(), e, data)?;
        self.push("gather", out, Op::Gather(table, ids.to_vec()), &[table])
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        if parts.iter().any(|p| self.value(*p).rows() != rows) {
            return Err(Error::shape("concat", "row counts differ"));
        }
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.value(*p).row(r));
            }
        }
        let out = Tensor::matrix(rows, cols, data)?;
        self.push("concat", out, Op::Concat(parts.to_vec()), parts)
    }

    /// Columns `start..start + len` of `a`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let x = self.value(a);
        if start + len > x.cols() {
            return Err(Error::shape(
                "slice",
                format!("{start}+{len} > {} columns", x.cols()),
            ));
        }
        let mut data = Vec::with_capacity(x.rows() * len);
        for r in 0..x.rows() {
            data.extend_from_slice(&x.row(r)[start..start + len]);
        }
        let out = Tensor::matrix(x.rows(), len, data)?;
        self.push("slice", out, Op::Slice(a, start), &[a])
    }

    /// Row `r` of `a` where `mask[r]`, else row `r` of `b`.
    pub fn select_rows(&mut self, mask: &[bool], a: Var, b: Var) -> Result<Var> {
        self.same_shape("select_rows", a, b)?;
        let (x, y) = (self.value(a), self.value(b));
        if mask.len() != x.rows() {
            return Err(Error::shape("select_rows", "mask length differs from rows"));
        }
        let mut data = Vec::with_capacity(x.len());
        for (r, keep) in mask.iter().enumerate() {
            data.extend_from_slice(if *keep { x.row(r) } else { y.row(r) });
        }
        let out = Tensor::matrix(x.rows(), x.cols(), data)?;
        self.push("select_rows", out, Op::SelectRows(mask.to_vec(), a, b), &[a, b])
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a).data().iter().sum());
        self.push("sum", out, Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len().max(1) as f64;
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n)
    }

    fn cross_entropy_impl(
        &mut self,
        logits: Var,
        targets: &[usize],
        ignore: Option<usize>,
        mean: bool,
    ) -> Result<Var> {
        let x = self.value(logits);
        let (r, v) = (x.rows(), x.cols());
        if targets.len() != r {
            return Err(Error::shape(
                "cross_entropy",
                format!("{} targets for {r} rows", targets.len()),
            ));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= v) {
            return Err(Error::IdOutOfRange { id: bad, size: v });
        }
        let logp = log_softmax_rows(x);
        let mut total = 0.0;
        let mut count = 0usize;
        for (i, &t) in targets.iter().enumerate() {
            if Some(t) == ignore {
                continue;
            }
            total -= logp.at(i, t);
            count += 1;
        }
        let scale = if mean && count > 0 { 1.0 / count as f64 } else { 1.0 };
        let probs = logp.map(f64::exp);
        let op = Op::CrossEntropy {
            logits,
            targets: targets.to_vec(),
            ignore,
            probs,
            scale,
        };
        self.push("cross_entropy", Tensor::scalar(total * scale), op, &[logits])
    }

    /// Mean over non-ignored rows of `-log softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize], ignore: Option<usize>) -> Result<Var> {
        self.cross_entropy_impl(logits, targets, ignore, true)
    }

    /// Like [`cross_entropy`](Self::cross_entropy) but summed.
    pub fn cross_entropy_sum(
        &mut self,
        logits: Var,
        targets: &[usize],
        ignore: Option<usize>,
    ) -> Result<Var> {
        self.cross_entropy_impl(logits, targets, ignore, false)
    }

    /// Mean absolute difference.
    pub fn l1_loss(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("l1_loss", a, b)?;
        let (x, y) = (self.value(a), self.value(b));
        let n = x.len().max(1) as f64;
        let total: f64 = x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs()).sum();
        self.push("l1_loss", Tensor::scalar(total / n), Op::L1(a, b), &[a, b])
    }

    /// Binary cross-entropy on sigmoid logits, averaged over all entries.
    pub fn binary_adversarial_loss(&mut self, logits: Var, label: Label) -> Result<Var> {
        let y = label.value();
        let x = self.value(logits);
        let n = x.len().max(1) as f64;
        let total: f64 = x.data().iter().map(|&z| softplus(z) - y * z).sum();
        self.push("binary_adversarial_loss", Tensor::scalar(total / n), Op::Bce(logits, y), &[logits])
    }

    /// Reverse pass from the scalar `out`.
    pub fn backward(&self, out: Var) -> Result<Gradients> {
        if self.value(out).len() != 1 {
            return Err(Error::shape("backward", "output is not a scalar"));
        }
        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[out.0] = Some(Tensor::new(self.value(out).shape().to_vec(), vec![1.0])?);

        for i in (0..=out.0).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(dy) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(dy);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let (x, w) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (x.rows(), x.cols(), w.cols());
                    if self.needs(*a) {
                        let g = self.slot(&mut grads, *a);
                        matmul_bt_into(dy.data(), w.data(), g.data_mut(), m, n, k);
                    }
                    if self.needs(*b) {
                        let g = self.slot(&mut grads, *b);
                        matmul_at_into(x.data(), dy.data(), g.data_mut(), m, k, n);
                    }
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut grads, *a, &dy);
                    self.accumulate(&mut grads, *b, &dy);
                }
                Op::Sub(a, b) => {
                    self.accumulate(&mut grads, *a, &dy);
                    if self.needs(*b) {
                        let g = self.slot(&mut grads, *b);
                        for (gv, d) in g.data_mut().iter_mut().zip(dy.data()) {
                            *gv -= d;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        let other = self.value(*b);
                        let g = self.slot(&mut grads, *a);
                        for ((gv, d), o) in g.data_mut().iter_mut().zip(dy.data()).zip(other.data()) {
                            *gv += d * o;
                        }
                    }
                    if self.needs(*b) {
                        let other = self.value(*a);
                        let g = self.slot(&mut grads, *b);
                        for ((gv, d), o) in g.data_mut().iter_mut().zip(dy.data()).zip(other.data()) {
                            *gv += d * o;
                        }
                    }
                }
                Op::AddRow(a, bias) => {
                    self.accumulate(&mut grads, *a, &dy);
                    if self.needs(*bias) {
                        let c = dy.cols();
                        let g = self.slot(&mut grads, *bias);
                        for (j, d) in dy.data().iter().enumerate() {
                            g.data_mut()[j % c] += d;
                        }
                    }
                }
                Op::Scale(a, k) => {
                    let k = *k;
                    if self.needs(*a) {
                        let g = self.slot(&mut grads, *a);
                        for (gv, d) in g.data_mut().iter_mut().zip(dy.data()) {
                            *gv += k * d;
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    if self.needs(*a) {
                        let g = self.slot(&mut grads, *a);
                        for ((gv, d), s) in g.data_mut().iter_mut().zip(dy.data()).zip(y.data()) {
                            *gv += d * s * (1.0 - s);
                        }
                    }
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    if self.needs(*a) {
                        let g = self.slot(&mut grads, *a);
                        for ((gv, d), t) in g.data_mut().iter_mut().zip(dy.data()).zip(y.data()) {
                            *gv += d * (1.0 - t * t);
                        }
                    }
                }
                Op::Softmax(a) => {
                    let p = &node.value;
                    if self.needs(*a) {
                        let c = p.cols();
                        let g = self.slot(&mut grads, *a);
                        for r in 0..p.rows() {
                            let (pr, dr) = (p.row(r), dy.row(r));
                            let dot: f64 = pr.iter().zip(dr).map(|(x, y)| x * y).sum();
                            for j in 0..c {
                                g.data_mut()[r * c + j] += pr[j] * (dr[j] - dot);
                            }
                        }
                    }
                }
                Op::LogSoftmax(a) => {
                    let lp = &node.value;
                    if self.needs(*a) {
                        let c = lp.cols();
                        let g = self.slot(&mut grads, *a);
                        for r in 0..lp.rows() {
                            let (lr, dr) = (lp.row(r), dy.row(r));
                            let total: f64 = dr.iter().sum();
                            for j in 0..c {
                                g.data_mut()[r * c + j] += dr[j] - lr[j].exp() * total;
                            }
                        }
                    }
                }
                Op::Gather(table, ids) => {
                    if self.needs(*table) {
                        let e = dy.cols();
                        let g = self.slot(&mut grads, *table);
                        for (r, &id) in ids.iter().enumerate() {
                            let dst = &mut g.data_mut()[id * e..(id + 1) * e];
                            for (gv, d) in dst.iter_mut().zip(dy.row(r)) {
                                *gv += d;
                            }
                        }
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let w = self.value(*p).cols();
                        if self.needs(*p) {
                            let g = self.slot(&mut grads, *p);
                            for r in 0..dy.rows() {
                                let src = &dy.row(r)[offset..offset + w];
                                for (gv, d) in g.data_mut()[r * w..(r + 1) * w].iter_mut().zip(src) {
                                    *gv += d;
                                }
                            }
                        }
                        offset += w;
                    }
                }
                Op::Slice(a, start) => {
                    if self.needs(*a) {
                        
                        let c = self.value(*a).cols();
                        let g = self.slot(&mut grads, *a);
                        for r in 0..dy.rows() {
                            for (j, d) in dy.row(r).iter().enumerate() {
                                g.data_mut()[r * c + start + j] += d;
                            }
                        }
                    }
                }
                Op::SelectRows(mask, a, b) => {
                    let c = dy.cols();
                    for (src, take) in [(*a, true), (*b, false)] {
                        if self.needs(src) {
                            let g = self.slot(&mut grads, src);
                            for (r, m) in mask.iter().enumerate() {
                                if *m == take {
                                    for j in 0..c {
                                        g.data_mut()[r * c + j] += dy.data()[r * c + j];
                                    }
                                }
                            }
                        }
                    }
                }
                Op::Sum(a) => {
                    let d = dy.item();
                    if self.needs(*a) {
                        let g = self.slot(&mut grads, *a);
                        for gv in g.data_mut() {
                            *gv += d;
                        }
                    }
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    ignore,
                    probs,
                    scale,
                } => {
                    let d = dy.item() * scale;
                    if self.needs(*logits) {
                        let c = probs.cols();
                        let g = self.slot(&mut grads, *logits);
                        for (r, &t) in targets.iter().enumerate() {
                            if Some(t) == *ignore {
                                continue;
                            }
                            for j in 0..c {
                                let onehot = if j == t { 1.0 } else { 0.0 };
                                g.data_mut()[r * c + j] += d * (probs.at(r, j) - onehot);
                            }
                        }
                    }
                }
                Op::L1(a, b) => {
                    let (x, y) = (self.value(*a), self.value(*b));
                    let n = x.len().max(1) as f64;
                    let d = dy.item() / n;
                    let signs: Vec<f64> = x
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(p, q)| {
                            let diff: f64 = p - q;
                            if diff == 0.0 { 0.0 } else { diff.signum() * d }
                        })
                        .collect();
                    if self.needs(*a) {
                        let g = self.slot(&mut grads, *a);
                        for (gv, s) in g.data_mut().iter_mut().zip(&signs) {
                            *gv += s;
                        }
                    }
                    if self.needs(*b) {
                        let g = self.slot(&mut grads, *b);
                        for (gv, s) in g.data_mut().iter_mut().zip(&signs) {
                            *gv -= s;
                        }
                    }
                }
                Op::Bce(logits, y) => {
                    let x = self.value(*logits);
                    let n = x.len().max(1) as f64;
                    let d = dy.item() / n;
                    let local: Vec<f64> = x.data().iter().map(|&z| d * (sigmoid(z) - y)).collect();
                    if self.needs(*logits) {
                        let g = self.slot(&mut grads, *logits);
                        for (gv, l) in g.data_mut().iter_mut().zip(&local) {
                            *gv += l;
                        }
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Tensor>], v: Var) -> &'g mut Tensor {
        grads[v.0].get_or_insert_with(|| Tensor::zeros_like(&self.nodes[v.0].value))
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, dy: &Tensor) {
        if self.needs(v) {
            self.slot(grads, v).add_assign(dy);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn softmax_uniform() {
        let mut g = Graph::new();
        let x = g.constant(m(&[&[0.3, 0.3, 0.3, 0.3]]));
        let p = g.softmax(x).unwrap();
        for v in g.value(p).data() {
            assert_relative_eq!(*v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(2, 3), true);
        let s = g.sigmoid(x).unwrap();
        let total = g.sum(s).unwrap();
        let grads = g.backward(total).unwrap();
        for v in grads.get(x).unwrap().data() {
            assert_eq!(*v, 0.25);
        }
    }

    #[test]
    fn cross_entropy_values() {
        let mut g = Graph::new();
        let uniform = g.constant(Tensor::zeros(3, 10));
        let ce = g.cross_entropy(uniform, &[1, 4, 9], None).unwrap();
        assert_relative_eq!(g.scalar(ce), 10f64.ln(), epsilon = 1e-12);

        let confident = g.constant(m(&[&[60.0, 0.0, 0.0]]));
        let ce = g.cross_entropy(confident, &[0], None).unwrap();
        assert!(g.scalar(ce) < 1e-20);

        // By hand: row 0 = [1, 2, 3] target 2, row 1 = [0, 0, ln 2] target 0.
        // -log(e^3 / (e + e^2 + e^3)) and -log(1 / (1 + 1 + 2)) = ln 4.
        let logits = g.constant(m(&[&[1.0, 2.0, 3.0], &[0.0, 0.0, 2f64.ln()]]));
        let ce = g.cross_entropy(logits, &[2, 0], None).unwrap();
        let e = std::f64::consts::E;
        let row0 = -(e.powi(3) / (e + e * e + e.powi(3))).ln();
        let expected = (row0 + 4f64.ln()) / 2.0;
        assert_relative_eq!(g.scalar(ce), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 0.896_950_162_782_135_5, epsilon = 1e-12);

        // Ignored rows drop out of both sum and count.
        let ce = g.cross_entropy(logits, &[2, 0], Some(0)).unwrap();
        assert_relative_eq!(g.scalar(ce), row0, epsilon = 1e-12);
        assert!(matches!(
            g.cross_entropy(logits, &[3, 0], None),
            Err(Error::IdOutOfRange { id: 3, size: 3 })
        ));
    }

    #[test]
    fn l1_values() {
        let mut g = Graph::new();
        let a = g.constant(m(&[&[1.0, 2.0]]));
        let z = g.constant(Tensor::zeros(1, 2));
        let l = g.l1_loss(a, z).unwrap();
        assert_eq!(g.scalar(l), 1.5);
        let same = g.l1_loss(a, a).unwrap();
        assert_eq!(g.scalar(same), 0.0);
        let wide = g.constant(Tensor::zeros(1, 3));
        assert!(matches!(g.l1_loss(a, wide), Err(Error::Shape { .. })));
    }

    #[test]
    fn adversarial_loss_values() {
        let mut g = Graph::new();
        let zero = g.constant(Tensor::scalar(0.0));
        for label in [Label::Real, Label::Fake] {
            let l = g.binary_adversarial_loss(zero, label).unwrap();
            assert_relative_eq!(g.scalar(l), 2f64.ln(), epsilon = 1e-15);
        }
        let big = g.constant(Tensor::scalar(50.0));
        let l = g.binary_adversarial_loss(big, Label::Real).unwrap();
        assert!(g.scalar(l) < 1e-20);
        let one = g.constant(Tensor::scalar(1.0));
        let l = g.binary_adversarial_loss(one, Label::Fake).unwrap();
        let by_hand = -(1.0 - 1.0 / (1.0 + (-1f64).exp())).ln();
        assert_relative_eq!(g.scalar(l), by_hand, epsilon = 1e-12);
        assert_relative_eq!(g.scalar(l), 1.313_261_687_518_222_8, epsilon = 1e-12);
    }

    #[test]
    fn non_finite_names_the_op() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(1e308));
        match g.scale(x, 10.0) {
            Err(Error::NonFinite { op }) => assert_eq!(op, "scale"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shape_errors() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(2, 3));
        let b = g.constant(Tensor::zeros(2, 3));
        assert!(g.matmul(a, b).is_err());
        assert!(g.add_row(a, b).is_err());
        assert!(g.slice(a, 2, 2).is_err());
        assert!(g.gather(a, &[5]).is_err());
        let s = g.sum(a).unwrap();
        assert!(g.backward(a).is_err());
        assert!(g.backward(s).is_ok());
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::new();
        let w = g.leaf(m(&[&[1.0, 2.0]]), true);
        let c = g.constant(m(&[&[3.0, 4.0]]));
        let p = g.mul(w, c).unwrap();
        let s = g.sum(p).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), &[3.0, 4.0]);
        assert!(grads.get(c).is_none());
    }
}
