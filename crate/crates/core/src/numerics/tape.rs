//! Reverse-mode differentiation over a linear tape.
//!
//! Every operation evaluates eagerly and appends a node. A node only keeps a
//! backward rule when at least one input requires a gradient; everything
//! computed purely from constants or frozen parameters is stored as a
//! constant and skipped by [`Tape::backward`].

use std::ops::Deref;

use super::ops;
use super::{Parameter, Tensor2D};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Value<'a> {
    Borrowed(&'a Tensor2D),
    Owned(Tensor2D),
}

impl Deref for Value<'_> {
    type Target = Tensor2D;
    fn deref(&self) -> &Tensor2D {
        match self {
            Value::Borrowed(t) => t,
            Value::Owned(t) => t,
        }
    }
}

enum Op {
    Input,
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f32),
    Relu(Var),
    Gelu(Var),
    LayerNorm { x: Var, gain: Var, bias: Var, eps: f32 },
    Softmax(Var),
    CausalSoftmax(Var),
    GatherRows(Var, Vec<usize>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    SelectCols(Var, Vec<usize>),
    Sum(Var),
    CrossEntropy(Var, Vec<usize>),
}

struct Node<'a> {
    value: Value<'a>,
    op: Op,
    requires_grad: bool,
}

/// Gradients produced by one backward pass, indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Tensor2D>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor2D> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Accumulates the gradient of `v` into `param` (no-op when `v` had no
    /// gradient path or `param` is frozen).
    pub fn write_into(&self, v: Var, param: &mut Parameter) {
        if let Some(g) = self.get(v) {
            param.accumulate_grad(g);
        }
    }
}

#[derive(Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of nodes that carry a backward rule.
    pub fn recorded_len(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.requires_grad && !matches!(n.op, Op::Input))
            .count()
    }

    pub fn value(&self, v: Var) -> &Tensor2D {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Value<'a>, op: Op, requires_grad: bool) -> Var {
        let op = if requires_grad { op } else { Op::Input };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Registers a parameter by reference. Frozen parameters become constants.
    pub fn param(&mut self, p: &'a Parameter) -> Var {
        self.push(Value::Borrowed(&p.value), Op::Input, !p.frozen)
    }

    pub fn constant(&mut self, t: Tensor2D) -> Var {
        self.push(Value::Owned(t), Op::Input, false)
    }

    pub fn constant_ref(&mut self, t: &'a Tensor2D) -> Var {
        self.push(Value::Borrowed(t), Op::Input, false)
    }

    /// An owned input that receives a gradient.
    pub fn variable(&mut self, t: Tensor2D) -> Var {
        self.push(Value::Owned(t), Op::Input, true)
    }

    fn unary(&mut self, out: Tensor2D, op: Op, input: Var) -> Var {
        let rg = self.any_grad(&[input]);
        self.push(Value::Owned(out), op, rg)
    }

    fn binary(&mut self, out: Tensor2D, op: Op, a: Var, b: Var) -> Var {
        let rg = self.any_grad(&[a, b]);
        self.push(Value::Owned(out), op, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = ops::matmul(self.value(a), self.value(b))?;
        Ok(self.binary(out, Op::MatMul(a, b), a, b))
    }

    /// `a · bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = ops::matmul_nt(self.value(a), self.value(b))?;
        Ok(self.binary(out, Op::MatMulNt(a, b), a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        ta.check_same_shape(tb, "add")?;
        let mut out = ta.clone();
        out.add_assign(tb);
        Ok(self.binary(out, Op::Add(a, b), a, b))
    }

    /// Adds the 1×c row `row` to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (tx, tr) = (self.value(x), self.value(row));
        if tr.rows() != 1 || tr.cols() != tx.cols() {
            return Err(Error::Dimension {
                op: "add_row",
                lhs: tx.shape(),
                rhs: tr.shape(),
            });
        }
        let mut out = tx.clone();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(tr.data()) {
                *o += b;
            }
        }
        Ok(self.binary(out, Op::AddRow(x, row), x, row))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        ta.check_same_shape(tb, "mul")?;
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let out = Tensor2D::from_vec(ta.rows(), ta.cols(), data)?;
        Ok(self.binary(out, Op::Mul(a, b), a, b))
    }

    pub fn scale(&mut self, x: Var, c: f32) -> Var {
        let out = self.value(x).map(|v| v * c);
        self.unary(out, Op::Scale(x, c), x)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| if v < 0.0 { 0.0 } else { v });
        self.unary(out, Op::Relu(x), x)
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(ops::gelu);
        self.unary(out, Op::Gelu(x), x)
    }

    /// Row-wise layer normalization; `gain` and `bias` are 1×d rows.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f32) -> Result<Var> {
        let (g, b) = (self.value(gain), self.value(bias));
        if g.rows() != 1 || b.rows() != 1 {
            return Err(Error::Dimension {
                op: "layer_norm",
                lhs: g.shape(),
                rhs: b.shape(),
            });
        }
        let out = ops::layer_norm(self.value(x), g.data(), b.data(), eps)?;
        let rg = self.any_grad(&[x, gain, bias]);
        Ok(self.push(
            Value::Owned(out),
            Op::LayerNorm { x, gain, bias, eps },
            rg,
        ))
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let out = ops::softmax_rows(self.value(x));
        self.unary(out, Op::Softmax(x), x)
    }

    /// Softmax of a square score matrix under a causal (lower-triangular) mask.
    pub fn causal_softmax(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        if t.rows() != t.cols() {
            return Err(Error::Dimension {
                op: "causal_softmax",
                lhs: t.shape(),
                rhs: (t.rows(), t.rows()),
            });
        }
        let out = ops::causal_softmax(t);
        Ok(self.unary(out, Op::CausalSoftmax(x), x))
    }

    /// Embedding lookup: row `i` of the result is row `ids[i]` of `table`.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = self.value(table);
        let mut out = Tensor2D::zeros(ids.len(), t.cols());
        for (i, &id) in ids.iter().enumerate() {
            if id >= t.rows() {
                return Err(Error::Index {
                    what: "gather_rows",
                    index: id,
                    limit: t.rows(),
                });
            }
            out.row_mut(i).copy_from_slice(t.row(id));
        }
        Ok(self.unary(out, Op::GatherRows(table, ids.to_vec()), table))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.value(x);
        if start + len > t.rows() {
            return Err(Error::Index {
                what: "slice_rows",
                index: start + len,
                limit: t.rows(),
            });
        }
        let data = t.data()[start * t.cols()..(start + len) * t.cols()].to_vec();
        let out = Tensor2D::from_vec(len, t.cols(), data)?;
        Ok(self.unary(out, Op::SliceRows(x, start), x))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.value(x);
        if start + len > t.cols() {
            return Err(Error::Index {
                what: "slice_cols",
                index: start + len,
                limit: t.cols(),
            });
        }
        let mut out = Tensor2D::zeros(t.rows(), len);
        for r in 0..t.rows() {
            out.row_mut(r).copy_from_slice(&t.row(r)[start..start + len]);
        }
        Ok(self.unary(out, Op::SliceCols(x, start), x))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(Error::Dimension {
                    op: "concat_rows",
                    lhs: self.value(parts[0]).shape(),
                    rhs: t.shape(),
                });
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let out = Tensor2D::from_vec(rows, cols, data)?;
        let rg = self.any_grad(parts);
        Ok(self.push(Value::Owned(out), Op::ConcatRows(parts.to_vec()), rg))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows() != rows {
                return Err(Error::Dimension {
                    op: "concat_cols",
                    lhs: self.value(parts[0]).shape(),
                    rhs: t.shape(),
                });
            }
            cols += t.cols();
        }
        let mut out = Tensor2D::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let t = self.value(p);
            for r in 0..rows {
                out.row_mut(r)[offset..offset + t.cols()].copy_from_slice(t.row(r));
            }
            offset += t.cols();
        }
        let rg = self.any_grad(parts);
        Ok(self.push(Value::Owned(out), Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Picks columns `idx` (in order) from every row.
    pub fn select_cols(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let t = self.value(x);
        let mut out = Tensor2D::zeros(t.rows(), idx.len());
        for (j, &c) in idx.iter().enumerate() {
            if c >= t.cols() {
                return Err(Error::Index {
                    what: "select_cols",
                    index: c,
                    limit: t.cols(),
                });
            }
            for r in 0..t.rows() {
                out.set(r, j, t.get(r, c));
            }
        }
        Ok(self.unary(out, Op::SelectCols(x, idx.to_vec()), x))
    }

    /// Sum of all elements as a 1×1 tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let out = Tensor2D::row_vector(vec![self.value(x).sum()]);
        self.unary(out, Op::Sum(x), x)
    }

    /// Mean over rows of `−log softmax(row)[target]`, as a 1×1 tensor.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let t = self.value(logits);
        if targets.len() != t.rows() {
            return Err(Error::Dimension {
                op: "cross_entropy",
                lhs: t.shape(),
                rhs: (targets.len(), 1),
            });
        }
        let mut total = 0.0f64;
        for (r, &target) in targets.iter().enumerate() {
            total += ops::cross_entropy(t.row(r), target)? as f64;
        }
        let out = Tensor2D::row_vector(vec![(total / targets.len() as f64) as f32]);
        Ok(self.unary(out, Op::CrossEntropy(logits, targets.to_vec()), logits))
    }

    /// Reverse accumulation from a 1×1 `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got shape {shape:?}"
            )));
        }
        let mut grads: Vec<Option<Tensor2D>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.nodes[loss.0].requires_grad {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(Tensor2D::filled(1, 1, 1.0));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Input) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor2D>], v: Var, g: Tensor2D) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn propagate(&self, node: &Node<'a>, g: &Tensor2D, grads: &mut [Option<Tensor2D>]) -> Result<()> {
        match &node.op {
            Op::Input => {}
            &Op::MatMul(a, b) => {
                if self.wants(a) {
                    let ga = ops::matmul_nt(g, self.value(b))?;
                    self.accumulate(grads, a, ga);
                }
                if self.wants(b) {
                    let gb = ops::matmul_tn(self.value(a), g)?;
                    self.accumulate(grads, b, gb);
                }
            }
            &Op::MatMulNt(a, b) => {
                if self.wants(a) {
                    let ga = ops::matmul(g, self.value(b))?;
                    self.accumulate(grads, a, ga);
                }
                if self.wants(b) {
                    let gb = ops::matmul_tn(g, self.value(a))?;
                    self.accumulate(grads, b, gb);
                }
            }
            &Op::Add(a, b) => {
                self.accumulate(grads, a, g.clone());
                self.accumulate(grads, b, g.clone());
            }
            &Op::AddRow(x, row) => {
                self.accumulate(grads, x, g.clone());
                if self.wants(row) {
                    let mut gr = Tensor2D::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, v) in gr.data_mut().iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    self.accumulate(grads, row, gr);
                }
            }
            &Op::Mul(a, b) => {
                let (ta, tb) = (self.value(a), self.value(b));
                if self.wants(a) {
                    let d = g.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
                    self.accumulate(grads, a, Tensor2D::from_vec(g.rows(), g.cols(), d)?);
                }
                if self.wants(b) {
                    let d = g.data().iter().zip(ta.data()).map(|(x, y)| x * y).collect();
                    self.accumulate(grads, b, Tensor2D::from_vec(g.rows(), g.cols(), d)?);
                }
            }
            &Op::Scale(x, c) => self.accumulate(grads, x, g.map(|v| v * c)),
            &Op::Relu(x) => {
                let tx = self.value(x);
                let d = g
                    .data()
                    .iter()
                    .zip(tx.data())
                    .map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 })
                    .collect();
                self.accumulate(grads, x, Tensor2D::from_vec(g.rows(), g.cols(), d)?);
            }
            &Op::Gelu(x) => {
                let tx = self.value(x);
                let d = g
                    .data()
                    .iter()
                    .zip(tx.data())
                    .map(|(gv, xv)| gv * ops::gelu_grad(*xv))
                    .collect();
                self.accumulate(grads, x, Tensor2D::from_vec(g.rows(), g.cols(), d)?);
            }
            &Op::LayerNorm { x, gain, bias, eps } => {
                let tx = self.value(x);
                let tg = self.value(gain);
                let d = tx.cols();
                let mut gx = Tensor2D::zeros(tx.rows(), d);
                let mut gg = Tensor2D::zeros(1, d);
                let mut gb = Tensor2D::zeros(1, d);
                let mut xhat = vec![0.0f32; d];
                let mut dxhat = vec![0.0f32; d];
                for r in 0..tx.rows() {
                    let row = tx.row(r);
                    let grow = g.row(r);
                    let (mean, inv_std) = ops::row_moments(row, eps);
                    let mut mean_dxhat = 0.0f64;
                    let mut mean_dxhat_xhat = 0.0f64;
                    for c in 0..d {
                        xhat[c] = (row[c] - mean) * inv_std;
                        dxhat[c] = grow[c] * tg.data()[c];
                        mean_dxhat += dxhat[c] as f64;
                        mean_dxhat_xhat += (dxhat[c] * xhat[c]) as f64;
                        gg.data_mut()[c] += grow[c] * xhat[c];
                        gb.data_mut()[c] += grow[c];
                    }
                    let mean_dxhat = (mean_dxhat / d as f64) as f32;
                    let mean_dxhat_xhat = (mean_dxhat_xhat / d as f64) as f32;
                    for (c, o) in gx.row_mut(r).iter_mut().enumerate() {
                        *o = inv_std * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
                    }
                }
                self.accumulate(grads, x, gx);
                self.accumulate(grads, gain, gg);
                self.accumulate(grads, bias, gb);
            }
            &Op::Softmax(x) | &Op::CausalSoftmax(x) => {
                // Masked entries have y = 0, so the same rule covers both.
                let y = &*node.value;
                let mut gx = Tensor2D::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let inner = ops::dot(yr, gr);
                    for (c, o) in gx.row_mut(r).iter_mut().enumerate() {
                        *o = yr[c] * (gr[c] - inner);
                    }
                }
                self.accumulate(grads, x, gx);
            }
            Op::GatherRows(table, ids) => {
                let t = self.value(*table);
                let mut gt = Tensor2D::zeros(t.rows(), t.cols());
                for (i, &id) in ids.iter().enumerate() {
                    for (o, v) in gt.row_mut(id).iter_mut().zip(g.row(i)) {
                        *o += v;
                    }
                }
                self.accumulate(grads, *table, gt);
            }
            &Op::SliceRows(x, start) => {
                let t = self.value(x);
                let mut gx = Tensor2D::zeros(t.rows(), t.cols());
                let c = t.cols();
                gx.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                self.accumulate(grads, x, gx);
            }
            &Op::SliceCols(x, start) => {
                let t = self.value(x);
                let mut gx = Tensor2D::zeros(t.rows(), t.cols());
                for r in 0..t.rows() {
                    gx.row_mut(r)[start..start + g.cols()].copy_from_slice(g.row(r));
                }
                self.accumulate(grads, x, gx);
            }
            Op::ConcatRows(parts) => {
                let c = g.cols();
                let mut offset = 0;
                for &p in parts {
                    let rows = self.value(p).rows();
                    if self.wants(p) {
                        let data = g.data()[offset * c..(offset + rows) * c].to_vec();
                        self.accumulate(grads, p, Tensor2D::from_vec(rows, c, data)?);
                    }
                    offset += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let cols = self.value(p).cols();
                    if self.wants(p) {
                        let mut gp = Tensor2D::zeros(g.rows(), cols);
                        for r in 0..g.rows() {
                            gp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + cols]);
                        }
                        self.accumulate(grads, p, gp);
                    }
                    offset += cols;
                }
            }
            Op::SelectCols(x, idx) => {
                let t = self.value(*x);
                let mut gx = Tensor2D::zeros(t.rows(), t.cols());
                for (j, &c) in idx.iter().enumerate() {
                    for r in 0..t.rows() {
                        let v = gx.get(r, c) + g.get(r, j);
                        gx.set(r, c, v);
                    }
                }
                self.accumulate(grads, *x, gx);
            }
            &Op::Sum(x) => {
                let t = self.value(x);
                self.accumulate(grads, x, Tensor2D::filled(t.rows(), t.cols(), g.get(0, 0)));
            }
            Op::CrossEntropy(logits, targets) => {
                let t = self.value(*logits);
                let mut gl = ops::softmax_rows(t);
                let scale = g.get(0, 0) / targets.len() as f32;
                for (r, &target) in targets.iter().enumerate() {
                    let row = gl.row_mut(r);
                    row[target] -= 1.0;
                    row.iter_mut().for_each(|v| *v *= scale);
                }
                self.accumulate(grads, *logits, gl);
            }
        }
        Ok(())
    }
}
