//! Tape-based reverse-mode differentiation over 2-D `f64` values.
//!
//! Nodes are appended in evaluation order, so the tape is already
//! topologically sorted and `backward` walks it from the end. Leaves may
//! borrow their values from parameter tensors; the graph lives for one
//! forward/backward pass and is confined to one thread.

use std::borrow::Cow;

use rand::Rng;

use super::ops::{
    check_rate, dot, dropout_mask, log_sum_exp, matmul_acc, matmul_nt_acc, matmul_tn_acc,
    softmax_in_place, standardize, Mode,
};
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    SoftmaxRows(Var),
    LayerNormRows {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Dropout(Var, Vec<f64>),
    CrossEntropy {
        logits: Var,
        gold: Vec<usize>,
        probs: Vec<f64>,
    },
    Sum(Var),
    Dot(Var, Var),
    StackRows(Vec<Var>),
    AdditiveScores {
        q: Var,
        k: Var,
        v: Var,
        tanh: Vec<f64>,
    },
}

struct Node<'a> {
    value: Cow<'a, [f64]>,
    rows: usize,
    cols: usize,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Graph<'a> {
    nodes: Vec<Node<'a>>,
}

/// Gradients of every node that lies on a path to the loss.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

fn shape_err(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

impl<'a> Graph<'a> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Cow<'a, [f64]>, rows: usize, cols: usize, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        debug_assert!(value.iter().all(|v| v.is_finite()), "non-finite value in graph");
        self.nodes.push(Node {
            value,
            rows,
            cols,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node<'a> {
        &self.nodes[v.0]
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = self.node(v);
        (n.rows, n.cols)
    }

    /// Leaf whose values are copied or borrowed.
    pub fn leaf(&mut self, value: Cow<'a, [f64]>, rows: usize, cols: usize, requires_grad: bool) -> Result<Var> {
        if value.len() != rows * cols {
            return Err(Error::Shape(format!(
                "leaf of {} values declared {rows}x{cols}",
                value.len()
            )));
        }
        Ok(self.push(value, rows, cols, Op::Leaf, requires_grad))
    }

    /// Leaf borrowing a tensor; differentiable iff the tensor requires grad.
    pub fn tensor(&mut self, t: &'a Tensor) -> Var {
        let (r, c) = t.dims2();
        self.push(Cow::Borrowed(t.values()), r, c, Op::Leaf, t.requires_grad)
    }

    /// Non-differentiable leaf owning its values.
    pub fn constant(&mut self, t: Tensor) -> Var {
        let (r, c) = t.dims2();
        self.push(Cow::Owned(t.into_values()), r, c, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(shape_err("matmul", (m, k), (k2, n)));
        }
        let mut out = vec![0.0; m * n];
        matmul_acc(self.value(a), self.value(b), &mut out, m, k, n);
        let rg = self.needs(&[a, b]);
        Ok(self.push(Cow::Owned(out), m, n, Op::MatMul(a, b), rg))
    }

    /// `a * b^T`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.shape(a);
        let (n, k2) = self.shape(b);
        if k != k2 {
            return Err(shape_err("matmul_nt", (m, k), (n, k2)));
        }
        let mut out = vec![0.0; m * n];
        matmul_nt_acc(self.value(a), self.value(b), &mut out, m, k, n);
        let rg = self.needs(&[a, b]);
        Ok(self.push(Cow::Owned(out), m, n, Op::MatMulNt(a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err("add", self.shape(a), self.shape(b)));
        }
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let (r, c) = self.shape(a);
        let rg = self.needs(&[a, b]);
        Ok(self.push(Cow::Owned(out), r, c, Op::Add(a, b), rg))
    }

    /// Add a `1 x n` row to every row of an `m x n` matrix.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (m, n) = self.shape(x);
        if self.shape(row) != (1, n) {
            return Err(shape_err("add_row", (m, n), self.shape(row)));
        }
        let b = self.value(row);
        let out = self
            .value(x)
            .chunks(n)
            .flat_map(|r| r.iter().zip(b).map(|(x, y)| x + y))
            .collect();
        let rg = self.needs(&[x, row]);
        Ok(self.push(Cow::Owned(out), m, n, Op::AddRow(x, row), rg))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x).iter().map(|v| v * c).collect();
        let (r, cl) = self.shape(x);
        let rg = self.needs(&[x]);
        self.push(Cow::Owned(out), r, cl, Op::Scale(x, c), rg)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).iter().map(|v| v.max(0.0)).collect();
        let (r, c) = self.shape(x);
        let rg = self.needs(&[x]);
        self.push(Cow::Owned(out), r, c, Op::Relu(x), rg)
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let (r, c) = self.shape(x);
        let mut out = self.value(x).to_vec();
        for row in out.chunks_mut(c) {
            softmax_in_place(row);
        }
        let rg = self.needs(&[x]);
        self.push(Cow::Owned(out), r, c, Op::SoftmaxRows(x), rg)
    }

    /// Per-row layer normalization with `1 x n` gain and bias.
    pub fn layer_norm_rows(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let (m, n) = self.shape(x);
        if self.shape(gain) != (1, n) || self.shape(bias) != (1, n) {
            return Err(shape_err("layer_norm", (m, n), self.shape(gain)));
        }
        let mut xhat = Vec::with_capacity(m * n);
        let mut inv_std = Vec::with_capacity(m);
        for row in self.value(x).chunks(n) {
            let (h, s) = standardize(row, eps);
            xhat.extend(h);
            inv_std.push(s);
        }
        let (g, b) = (self.value(gain), self.value(bias));
        let out = xhat
            .chunks(n)
            .flat_map(|r| r.iter().zip(g).zip(b).map(|((h, g), b)| g * h + b))
            .collect();
        let rg = self.needs(&[x, gain, bias]);
        Ok(self.push(
            Cow::Owned(out),
            m,
            n,
            Op::LayerNormRows {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
            rg,
        ))
    }

    /// Inverted dropout; identity (no node, no randomness drawn) in eval mode
    /// or at rate zero.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, mode: Mode, rng: &mut R) -> Result<Var> {
        check_rate(rate)?;
        if mode == Mode::Eval || rate == 0.0 {
            return Ok(x);
        }
        let (r, c) = self.shape(x);
        let mask = dropout_mask(r * c, rate, rng);
        let out = self.value(x).iter().zip(&mask).map(|(v, m)| v * m).collect();
        let rg = self.needs(&[x]);
        Ok(self.push(Cow::Owned(out), r, c, Op::Dropout(x, mask), rg))
    }

    /// Sum over rows of `-ln softmax(row)[gold_row]`; a `1 x 1` node.
    pub fn cross_entropy_sum(&mut self, logits: Var, gold: &[usize]) -> Result<Var> {
        let (m, n) = self.shape(logits);
        if gold.len() != m {
            return Err(Error::Shape(format!("{} gold labels for {m} rows", gold.len())));
        }
        if let Some(&g) = gold.iter().find(|&&g| g >= n) {
            return Err(Error::InvalidArgument(format!(
                "gold index {g} out of range for {n} classes"
            )));
        }
        let mut loss = 0.0;
        let mut probs = self.value(logits).to_vec();
        for (row, &g) in self.value(logits).chunks(n).zip(gold) {
            loss += log_sum_exp(row) - row[g];
        }
        for row in probs.chunks_mut(n) {
            softmax_in_place(row);
        }
        let rg = self.needs(&[logits]);
        Ok(self.push(
            Cow::Owned(vec![loss]),
            1,
            1,
            Op::CrossEntropy {
                logits,
                gold: gold.to_vec(),
                probs,
            },
            rg,
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().sum();
        let rg = self.needs(&[x]);
        self.push(Cow::Owned(vec![s]), 1, 1, Op::Sum(x), rg)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).len() != self.value(b).len() {
            return Err(shape_err("dot", self.shape(a), self.shape(b)));
        }
        let s = dot(self.value(a), self.value(b));
        let rg = self.needs(&[a, b]);
        Ok(self.push(Cow::Owned(vec![s]), 1, 1, Op::Dot(a, b), rg))
    }

    /// Stack `1 x n` rows into an `m x n` matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let Some(&first) = rows.first() else {
            return Err(Error::InvalidArgument("stack of zero rows".into()));
        };
        let n = self.shape(first).1;
        let mut out = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            if self.shape(r) != (1, n) {
                return Err(shape_err("stack_rows", (1, n), self.shape(r)));
            }
            out.extend_from_slice(self.value(r));
        }
        let rg = self.needs(rows);
        Ok(self.push(Cow::Owned(out), rows.len(), n, Op::StackRows(rows.to_vec()), rg))
    }

    /// Additive attention scores `S[i][j] = sum_h v[h] * tanh(q[i][h] + k[j][h])`
    /// for `q: m x h`, `k: n x h`, `v: 1 x h`.
    pub fn additive_scores(&mut self, q: Var, k: Var, v: Var) -> Result<Var> {
        let (m, h) = self.shape(q);
        let (n, h2) = self.shape(k);
        if h != h2 || self.shape(v) != (1, h) {
            return Err(shape_err("additive_scores", (m, h), (n, h2)));
        }
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let mut tanh = Vec::with_capacity(m * n * h);
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            let qi = &qv[i * h..(i + 1) * h];
            for j in 0..n {
                let kj = &kv[j * h..(j + 1) * h];
                let mut s = 0.0;
                for t in 0..h {
                    let th = (qi[t] + kj[t]).tanh();
                    s += vv[t] * th;
                    tanh.push(th);
                }
                out.push(s);
            }
        }
        let rg = self.needs(&[q, k, v]);
        Ok(self.push(Cow::Owned(out), m, n, Op::AdditiveScores { q, k, v, tanh }, rg))
    }

    /// Reverse pass from a `1 x 1` node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            let (r, c) = self.shape(loss);
            return Err(Error::Shape(format!("backward from a {r}x{c} node; need a scalar")));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        if !self.node(loss).requires_grad {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<'a>, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let (rows, cols) = (node.rows, node.cols);
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.shape(*a);
                let n = cols;
                if self.node(*a).requires_grad {
                    // dA = dC * B^T
                    let bv = self.value(*b);
                    with_grad(grads, *a, m * k, |ga| matmul_nt_acc(g, bv, ga, m, n, k));
                }
                if self.node(*b).requires_grad {
                    // dB = A^T * dC
                    let av = self.value(*a);
                    with_grad(grads, *b, k * n, |gb| matmul_tn_acc(av, g, gb, m, k, n));
                }
            }
            Op::MatMulNt(a, b) => {
                let (m, k) = self.shape(*a);
                let n = cols;
                if self.node(*a).requires_grad {
                    // dA = dC * B
                    let bv = self.value(*b);
                    with_grad(grads, *a, m * k, |ga| matmul_acc(g, bv, ga, m, n, k));
                }
                if self.node(*b).requires_grad {
                    // dB = dC^T * A
                    let av = self.value(*a);
                    with_grad(grads, *b, n * k, |gb| matmul_tn_acc(g, av, gb, m, n, k));
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if self.node(v).requires_grad {
                        with_grad(grads, v, g.len(), |gv| add_into(gv, g));
                    }
                }
            }
            Op::AddRow(x, row) => {
                if self.node(*x).requires_grad {
                    with_grad(grads, *x, g.len(), |gx| add_into(gx, g));
                }
                if self.node(*row).requires_grad {
                    with_grad(grads, *row, cols, |gr| {
                        for r in g.chunks(cols) {
                            add_into(gr, r);
                        }
                    });
                }
            }
            Op::Scale(x, c) => {
                with_grad(grads, *x, g.len(), |gx| {
                    gx.iter_mut().zip(g).for_each(|(o, v)| *o += c * v)
                });
            }
            Op::Relu(x) => {
                let xv = self.value(*x);
                with_grad(grads, *x, g.len(), |gx| {
                    for ((o, v), xi) in gx.iter_mut().zip(g).zip(xv) {
                        if *xi > 0.0 {
                            *o += v;
                        }
                    }
                });
            }
            Op::SoftmaxRows(x) => {
                let y = &node.value;
                with_grad(grads, *x, g.len(), |gx| {
                    for ((gx_r, g_r), y_r) in gx.chunks_mut(cols).zip(g.chunks(cols)).zip(y.chunks(cols)) {
                        let inner = dot(g_r, y_r);
                        for ((o, gi), yi) in gx_r.iter_mut().zip(g_r).zip(y_r) {
                            *o += yi * (gi - inner);
                        }
                    }
                });
            }
            Op::LayerNormRows {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                if self.node(*gain).requires_grad {
                    with_grad(grads, *gain, cols, |gg| {
                        for (g_r, h_r) in g.chunks(cols).zip(xhat.chunks(cols)) {
                            for ((o, gi), hi) in gg.iter_mut().zip(g_r).zip(h_r) {
                                *o += gi * hi;
                            }
                        }
                    });
                }
                if self.node(*bias).requires_grad {
                    with_grad(grads, *bias, cols, |gb| {
                        for g_r in g.chunks(cols) {
                            add_into(gb, g_r);
                        }
                    });
                }
                if self.node(*x).requires_grad {
                    let gain_v = self.value(*gain);
                    let n = cols as f64;
                    with_grad(grads, *x, rows * cols, |gx| {
                        for r in 0..rows {
                            let g_r = &g[r * cols..(r + 1) * cols];
                            let h_r = &xhat[r * cols..(r + 1) * cols];
                            let dh: Vec<f64> = g_r.iter().zip(gain_v).map(|(a, b)| a * b).collect();
                            let mean_dh = dh.iter().sum::<f64>() / n;
                            let mean_dh_h = dot(&dh, h_r) / n;
                            for ((o, d), h) in gx[r * cols..(r + 1) * cols].iter_mut().zip(&dh).zip(h_r) {
                                *o += inv_std[r] * (d - mean_dh - h * mean_dh_h);
                            }
                        }
                    });
                }
            }
            Op::Dropout(x, mask) => {
                with_grad(grads, *x, g.len(), |gx| {
                    for ((o, v), m) in gx.iter_mut().zip(g).zip(mask) {
                        *o += v * m;
                    }
                });
            }
            Op::CrossEntropy { logits, gold, probs } => {
                let n = self.shape(*logits).1;
                let scale = g[0];
                with_grad(grads, *logits, probs.len(), |gl| {
                    for (r, &gi) in gold.iter().enumerate() {
                        for c in 0..n {
                            let onehot = if c == gi { 1.0 } else { 0.0 };
                            gl[r * n + c] += scale * (probs[r * n + c] - onehot);
                        }
                    }
                });
            }
            Op::Sum(x) => {
                let len = self.value(*x).len();
                with_grad(grads, *x, len, |gx| gx.iter_mut().for_each(|o| *o += g[0]));
            }
            Op::Dot(a, b) => {
                for (v, other) in [(*a, *b), (*b, *a)] {
                    if self.node(v).requires_grad {
                        let ov = self.value(other);
                        with_grad(grads, v, ov.len(), |gv| {
                            gv.iter_mut().zip(ov).for_each(|(o, x)| *o += g[0] * x)
                        });
                    }
                }
            }
            Op::StackRows(parts) => {
                for (r, &p) in parts.iter().enumerate() {
                    if self.node(p).requires_grad {
                        with_grad(grads, p, cols, |gp| add_into(gp, &g[r * cols..(r + 1) * cols]));
                    }
                }
            }
            Op::AdditiveScores { q, k, v, tanh } => {
                let (m, h) = self.shape(*q);
                let n = self.shape(*k).0;
                let vv = self.value(*v);
                let mut dq = vec![0.0; m * h];
                let mut dk = vec![0.0; n * h];
                let mut dv = vec![0.0; h];
                for i in 0..m {
                    for j in 0..n {
                        let gij = g[i * n + j];
                        let base = (i * n + j) * h;
                        for t in 0..h {
                            let th = tanh[base + t];
                            dv[t] += gij * th;
                            let dpre = gij * vv[t] * (1.0 - th * th);
                            dq[i * h + t] += dpre;
                            dk[j * h + t] += dpre;
                        }
                    }
                }
                for (var, d) in [(*q, dq), (*k, dk), (*v, dv)] {
                    if self.node(var).requires_grad {
                        with_grad(grads, var, d.len(), |gv| add_into(gv, &d));
                    }
                }
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

fn with_grad<F: FnOnce(&mut [f64])>(grads: &mut [Option<Vec<f64>>], v: Var, len: usize, f: F) {
    let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
    f(slot);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sum_gradient_is_ones() {
        let t = Tensor::vector(vec![1.0, -2.0, 3.0]).trainable();
        let mut g = Graph::new();
        let v = g.tensor(&t);
        let s = g.sum(v);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(v).unwrap(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn dot_self_gradient_is_twice() {
        let t = Tensor::vector(vec![0.5, -1.5, 2.0]).trainable();
        let mut g = Graph::new();
        let v = g.tensor(&t);
        let s = g.dot(v, v).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(v).unwrap(), &[1.0, -3.0, 4.0]);
    }

    #[test]
    fn backward_needs_scalar() {
        let t = Tensor::vector(vec![1.0, 2.0]).trainable();
        let mut g = Graph::new();
        let v = g.tensor(&t);
        assert!(g.backward(v).is_err());
    }

    #[test]
    fn frozen_leaves_get_no_gradient() {
        let a = Tensor::vector(vec![1.0, 2.0]);
        let b = Tensor::vector(vec![3.0, 4.0]).trainable();
        let mut g = Graph::new();
        let (va, vb) = (g.tensor(&a), g.tensor(&b));
        let s = g.dot(va, vb).unwrap();
        let grads = g.backward(s).unwrap();
        assert!(grads.get(va).is_none());
        assert_eq!(grads.get(vb).unwrap(), &[1.0, 2.0]);
    }

    /// Central finite differences of `f` with respect to every entry of each
    /// input tensor, compared with the tape gradient.
    fn check<F>(inputs: &[Tensor], f: F)
    where
        F: for<'g> Fn(&mut Graph<'g>, &[Var]) -> Var,
    {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.tensor(t)).collect();
        let out = f(&mut g, &vars);
        let grads = g.backward(out).unwrap();
        let h = 1e-5;
        for (ti, t) in inputs.iter().enumerate() {
            let analytic = grads.get(vars[ti]).map(|s| s.to_vec()).unwrap_or(vec![0.0; t.len()]);
            for e in 0..t.len() {
                let eval = |delta: f64| {
                    let mut shifted = inputs.to_vec();
                    shifted[ti].values_mut()[e] += delta;
                    let mut g = Graph::new();
                    let vars: Vec<Var> = shifted.iter().map(|t| g.tensor(t)).collect();
                    let out = f(&mut g, &vars);
                    g.value(out)[0]
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let a = analytic[e];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                assert!(rel < 1e-4, "input {ti}[{e}]: analytic {a} numeric {numeric}");
            }
        }
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
            .trainable()
    }

    #[test]
    fn finite_differences_per_op() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(&mut rng, 3, 4);
            let b = random(&mut rng, 4, 2);
            let w = random(&mut rng, 3, 2);
            check(&[a.clone(), b.clone(), w.clone()], |g, v| {
                let m = g.matmul(v[0], v[1]).unwrap();
                let r = g.relu(m);
                g.dot(r, v[2]).unwrap()
            });
            let c = random(&mut rng, 5, 4);
            check(&[a.clone(), c.clone()], |g, v| {
                let s = g.matmul_nt(v[0], v[1]).unwrap();
                let s = g.scale(s, 0.7);
                let p = g.softmax_rows(s);
                let q = g.matmul(p, v[1]).unwrap();
                let q2 = g.add(q, v[0]).unwrap();
                g.dot(q2, q2).unwrap()
            });
            let gain = random(&mut rng, 1, 4);
            let bias = random(&mut rng, 1, 4);
            let target = random(&mut rng, 3, 4);
            check(&[a.clone(), gain, bias, target], |g, v| {
                let y = g.layer_norm_rows(v[0], v[1], v[2], 1e-5).unwrap();
                let y = g.add_row(y, v[2]).unwrap();
                g.dot(y, v[3]).unwrap()
            });
            let q = random(&mut rng, 3, 4);
            let k = random(&mut rng, 2, 4);
            let vv = random(&mut rng, 1, 4);
            let rows = [random(&mut rng, 1, 2), random(&mut rng, 1, 2), random(&mut rng, 1, 2)];
            check(&[q, k, vv, rows[0].clone(), rows[1].clone(), rows[2].clone()], |g, v| {
                let s = g.additive_scores(v[0], v[1], v[2]).unwrap();
                let st = g.stack_rows(&[v[3], v[4], v[5]]).unwrap();
                let prod = g.dot(s, st).unwrap();
                let tot = g.sum(s);
                g.add(prod, tot).unwrap()
            });
            let logits = random(&mut rng, 3, 8);
            let gold: Vec<usize> = (0..3).map(|_| rng.gen_range(0..8)).collect();
            check(&[logits], |g, v| g.cross_entropy_sum(v[0], &gold).unwrap());
        }
    }

    #[test]
    fn dropout_gradient_uses_mask() {
        let t = Tensor::vector(vec![1.0; 64]).trainable();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut g = Graph::new();
        let v = g.tensor(&t);
        let d = g.dropout(v, 0.5, Mode::Train, &mut rng).unwrap();
        let s = g.sum(d);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(v).unwrap(), g.value(d));
        let mut g2 = Graph::new();
        let v2 = g2.tensor(&t);
        assert_eq!(g2.dropout(v2, 0.5, Mode::Eval, &mut rng).unwrap(), v2);
    }
}
