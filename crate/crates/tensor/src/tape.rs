//! Define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] is built fresh for each forward pass. Every primitive appends one
//! node holding its output value; [`Tape::backward`] walks the nodes in exact
//! reverse order and accumulates adjoints. Nodes that do not depend on a
//! tracked leaf are never visited on the way back.

use std::collections::HashMap;

use crate::error::{Result, TensorError};
use crate::params::{ParamGrads, ParamId, ParameterStore};
use crate::tensor::{matmul_a_bt_into, matmul_at_b_into, Tensor};

/// Reference to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unary {
    Abs,
    Sigmoid,
    Tanh,
    Relu,
    Exp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binary {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduce {
    Sum,
    Mean,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param,
    MatMul(Var, Var),
    Transpose(Var),
    Binary(Binary, Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Unary(Unary, Var),
    Ln { x: Var, floor: f64 },
    Reduce(Reduce, Var),
    MaxAxis { x: Var, winners: Vec<usize> },
    Softmax(Var),
    LayerNorm { x: Var, rstd: Vec<f64> },
    SliceCols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows { x: Var, rows: Vec<usize> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    param_order: Vec<(ParamId, Var)>,
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Untracked input; receives no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Tracked leaf that is not part of a parameter store (gradient checks).
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Registers a store entry on this tape. Repeated calls return the same
    /// node so gradient from every use lands in one place.
    pub fn param(&mut self, store: &ParameterStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).clone(), Op::Param, true);
        self.params.insert(id, v);
        self.param_order.push((id, v));
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(out, Op::MatMul(a, b), t))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.rank() != 2 {
            return Err(TensorError::Invalid {
                op: "transpose",
                msg: format!("expected a matrix, got shape {:?}", x.shape()),
            });
        }
        let out = x.transpose();
        let t = self.tracked(a);
        Ok(self.push(out, Op::Transpose(a), t))
    }

    pub fn binary(&mut self, op: Binary, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if !x.same_shape(y) {
            return Err(mismatch(
                match op {
                    Binary::Add => "add",
                    Binary::Sub => "sub",
                    Binary::Mul => "mul",
                },
                x,
                y,
            ));
        }
        let out = match op {
            Binary::Add => x.zip_map(y, |p, q| p + q),
            Binary::Sub => x.zip_map(y, |p, q| p - q),
            Binary::Mul => x.zip_map(y, |p, q| p * q),
        };
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(out, Op::Binary(op, a, b), t))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Mul, a, b)
    }

    fn check_row(&self, op: &'static str, x: Var, row: Var) -> Result<()> {
        let (xv, rv) = (self.value(x), self.value(row));
        if xv.rank() != 2 || rv.rank() != 2 || rv.rows() != 1 || rv.cols() != xv.cols() {
            return Err(mismatch(op, xv, rv));
        }
        Ok(())
    }

    /// `x[m×n] + row[1×n]` broadcast over rows (linear-layer bias).
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        self.check_row("add_row", x, row)?;
        let (xv, rv) = (self.value(x), self.value(row));
        let n = xv.cols();
        let mut out = xv.clone();
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            *o += rv.data()[i % n];
        }
        let t = self.tracked(x) || self.tracked(row);
        Ok(self.push(out, Op::AddRow(x, row), t))
    }

    /// `x[m×n] ⊙ row[1×n]` broadcast over rows (layer-norm gain).
    pub fn mul_row(&mut self, x: Var, row: Var) -> Result<Var> {
        self.check_row("mul_row", x, row)?;
        let (xv, rv) = (self.value(x), self.value(row));
        let n = xv.cols();
        let mut out = xv.clone();
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            *o *= rv.data()[i % n];
        }
        let t = self.tracked(x) || self.tracked(row);
        Ok(self.push(out, Op::MulRow(x, row), t))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x).map(|v| v * c);
        let t = self.tracked(x);
        self.push(out, Op::Scale(x, c), t)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x).map(|v| v + c);
        let t = self.tracked(x);
        self.push(out, Op::AddScalar(x), t)
    }

    pub fn unary(&mut self, op: Unary, x: Var) -> Var {
        let out = self.value(x).map(match op {
            Unary::Abs => f64::abs,
            Unary::Sigmoid => sigmoid,
            Unary::Tanh => f64::tanh,
            Unary::Relu => |v: f64| if v > 0.0 { v } else { 0.0 },
            Unary::Exp => f64::exp,
        });
        let t = self.tracked(x);
        self.push(out, Op::Unary(op, x), t)
    }

    pub fn abs(&mut self, x: Var) -> Var {
        self.unary(Unary::Abs, x)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(Unary::Sigmoid, x)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(Unary::Tanh, x)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(Unary::Relu, x)
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(Unary::Exp, x)
    }

    /// Natural log of `max(x, floor)`; values at or below the floor get no gradient.
    pub fn ln(&mut self, x: Var, floor: f64) -> Var {
        let out = self.value(x).map(|v| v.max(floor).ln());
        let t = self.tracked(x);
        self.push(out, Op::Ln { x, floor }, t)
    }

    pub fn reduce(&mut self, op: Reduce, x: Var) -> Var {
        let v = self.value(x);
        let s = v.sum();
        let out = match op {
            Reduce::Sum => s,
            Reduce::Mean => s / v.len() as f64,
        };
        let t = self.tracked(x);
        self.push(Tensor::scalar(out), Op::Reduce(op, x), t)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        self.reduce(Reduce::Sum, x)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        self.reduce(Reduce::Mean, x)
    }

    /// Maximum along `axis`, keeping that axis with extent 1. Gradient flows
    /// only to the first maximal element in scan order.
    pub fn max_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        let v = self.value(x);
        let (outer, len, inner) = axis_split("max_axis", v.shape(), axis)?;
        let mut out = Vec::with_capacity(outer * inner);
        let mut winners = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                let mut best = o * len * inner + i;
                for k in 1..len {
                    let idx = (o * len + k) * inner + i;
                    if v.data()[idx] > v.data()[best] {
                        best = idx;
                    }
                }
                out.push(v.data()[best]);
                winners.push(best);
            }
        }
        let mut shape = v.shape().to_vec();
        shape[axis] = 1;
        let out = Tensor::new(shape, out)?;
        let t = self.tracked(x);
        Ok(self.push(out, Op::MaxAxis { x, winners }, t))
    }

    /// Index of the first maximum along `axis`; not differentiable.
    pub fn argmax_axis(&self, x: Var, axis: usize) -> Result<Vec<usize>> {
        argmax_axis(self.value(x), axis)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        self.softmax_rows_masked(x, None)
    }

    /// Row-wise softmax restricted to the columns where `keep[j]` is true;
    /// excluded columns get probability exactly 0.
    pub fn softmax_rows_masked(&mut self, x: Var, keep: Option<&[bool]>) -> Result<Var> {
        let v = self.value(x);
        if v.rank() != 2 {
            return Err(TensorError::Invalid {
                op: "softmax_rows",
                msg: format!("expected a matrix, got shape {:?}", v.shape()),
            });
        }
        let (m, n) = (v.rows(), v.cols());
        if let Some(k) = keep {
            if k.len() != n || !k.iter().any(|&b| b) {
                return Err(TensorError::Invalid {
                    op: "softmax_rows",
                    msg: format!("mask of length {} with no kept column for {n} columns", k.len()),
                });
            }
        }
        let kept = |j: usize| keep.is_none_or(|k| k[j]);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &v.data()[i * n..(i + 1) * n];
            let mut mx = f64::NEG_INFINITY;
            for (j, &r) in row.iter().enumerate() {
                if kept(j) && r > mx {
                    mx = r;
                }
            }
            let mut z = 0.0;
            for (j, &r) in row.iter().enumerate() {
                if kept(j) {
                    let e = (r - mx).exp();
                    out[i * n + j] = e;
                    z += e;
                }
            }
            for o in &mut out[i * n..(i + 1) * n] {
                *o /= z;
            }
        }
        let t = self.tracked(x);
        Ok(self.push(Tensor::mat(m, n, out), Op::Softmax(x), t))
    }

    /// Per-row standardization `(x - mean) / sqrt(var + eps)`; no affine part.
    pub fn layer_norm_rows(&mut self, x: Var, eps: f64) -> Result<Var> {
        let v = self.value(x);
        if v.rank() != 2 {
            return Err(TensorError::Invalid {
                op: "layer_norm_rows",
                msg: format!("expected a matrix, got shape {:?}", v.shape()),
            });
        }
        let (m, n) = (v.rows(), v.cols());
        let mut out = vec![0.0; m * n];
        let mut rstd = Vec::with_capacity(m);
        for i in 0..m {
            let row = &v.data()[i * n..(i + 1) * n];
            let mu = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|r| (r - mu) * (r - mu)).sum::<f64>() / n as f64;
            let rs = 1.0 / (var + eps).sqrt();
            for (o, &r) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                *o = (r - mu) * rs;
            }
            rstd.push(rs);
        }
        let t = self.tracked(x);
        Ok(self.push(Tensor::mat(m, n, out), Op::LayerNorm { x, rstd }, t))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let v = self.value(x);
        if v.rank() != 2 || len == 0 || start + len > v.cols() {
            return Err(TensorError::Invalid {
                op: "slice_cols",
                msg: format!("columns {start}..{} of shape {:?}", start + len, v.shape()),
            });
        }
        let (m, n) = (v.rows(), v.cols());
        let mut out = Vec::with_capacity(m * len);
        for i in 0..m {
            out.extend_from_slice(&v.data()[i * n + start..i * n + start + len]);
        }
        let t = self.tracked(x);
        Ok(self.push(Tensor::mat(m, len, out), Op::SliceCols { x, start }, t))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(TensorError::Invalid {
            op: "concat_cols",
            msg: "no inputs".into(),
        })?;
        let m = self.value(first).rows();
        let mut n = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rank() != 2 || v.rows() != m {
                return Err(mismatch("concat_cols", self.value(first), v));
            }
            n += v.cols();
        }
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for &p in parts {
                let v = self.value(p);
                let c = v.cols();
                out.extend_from_slice(&v.data()[i * c..(i + 1) * c]);
            }
        }
        let t = parts.iter().any(|&p| self.tracked(p));
        Ok(self.push(Tensor::mat(m, n, out), Op::ConcatCols(parts.to_vec()), t))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(TensorError::Invalid {
            op: "concat_rows",
            msg: "no inputs".into(),
        })?;
        let n = self.value(first).cols();
        let mut out = Vec::new();
        let mut m = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rank() != 2 || v.cols() != n {
                return Err(mismatch("concat_rows", self.value(first), v));
            }
            m += v.rows();
            out.extend_from_slice(v.data());
        }
        let t = parts.iter().any(|&p| self.tracked(p));
        Ok(self.push(Tensor::mat(m, n, out), Op::ConcatRows(parts.to_vec()), t))
    }

    /// Selects rows of a matrix by index (embedding lookup, masking).
    pub fn gather_rows(&mut self, x: Var, rows: &[usize]) -> Result<Var> {
        let v = self.value(x);
        if v.rank() != 2 || rows.is_empty() {
            return Err(TensorError::Invalid {
                op: "gather_rows",
                msg: format!("{} rows from shape {:?}", rows.len(), v.shape()),
            });
        }
        let (m, n) = (v.rows(), v.cols());
        let mut out = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            if r >= m {
                return Err(TensorError::Invalid {
                    op: "gather_rows",
                    msg: format!("row {r} out of range for {m} rows"),
                });
            }
            out.extend_from_slice(&v.data()[r * n..(r + 1) * n]);
        }
        let t = self.tracked(x);
        Ok(self.push(
            Tensor::mat(rows.len(), n, out),
            Op::GatherRows { x, rows: rows.to_vec() },
            t,
        ))
    }

    /// Reverse sweep from a single-element output.
    pub fn backward(&self, loss: Var) -> Result<Grads> {
        if self.value(loss).len() != 1 {
            return Err(TensorError::Invalid {
                op: "backward",
                msg: format!("loss must hold one value, got shape {:?}", self.value(loss).shape()),
            });
        }
        let mut adj: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[loss.0] = Some(Tensor::full(self.value(loss).shape().to_vec(), 1.0));
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.tracked {
                continue;
            }
            let Some(g) = adj[idx].take() else { continue };
            self.propagate(idx, &g, &mut adj);
            adj[idx] = Some(g);
        }
        Ok(Grads {
            adj,
            params: self.param_order.clone(),
        })
    }

    fn propagate(&self, idx: usize, g: &Tensor, adj: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let y = &node.value;
        match &node.op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                if self.tracked(*a) {
                    let ga = slot(adj, *a, av);
                    matmul_a_bt_into(g.data(), bv.data(), ga.data_mut(), m, n, k);
                }
                if self.tracked(*b) {
                    let gb = slot(adj, *b, bv);
                    matmul_at_b_into(av.data(), g.data(), gb.data_mut(), m, k, n);
                }
            }
            Op::Transpose(a) => {
                if self.tracked(*a) {
                    let gt = g.transpose();
                    slot(adj, *a, self.value(*a)).add_assign(&gt);
                }
            }
            Op::Binary(op, a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.tracked(*a) {
                    let ga = slot(adj, *a, av);
                    match op {
                        Binary::Add | Binary::Sub => ga.add_assign(g),
                        Binary::Mul => {
                            for ((o, &gi), &bi) in ga.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                                *o += gi * bi;
                            }
                        }
                    }
                }
                if self.tracked(*b) {
                    let gb = slot(adj, *b, bv);
                    match op {
                        Binary::Add => gb.add_assign(g),
                        Binary::Sub => {
                            for (o, &gi) in gb.data_mut().iter_mut().zip(g.data()) {
                                *o -= gi;
                            }
                        }
                        Binary::Mul => {
                            for ((o, &gi), &ai) in gb.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                                *o += gi * ai;
                            }
                        }
                    }
                }
            }
            Op::AddRow(x, row) => {
                if self.tracked(*x) {
                    slot(adj, *x, self.value(*x)).add_assign(g);
                }
                if self.tracked(*row) {
                    let n = g.cols();
                    let gr = slot(adj, *row, self.value(*row));
                    for (i, &gi) in g.data().iter().enumerate() {
                        gr.data_mut()[i % n] += gi;
                    }
                }
            }
            Op::MulRow(x, row) => {
                let (xv, rv) = (self.value(*x), self.value(*row));
                let n = g.cols();
                if self.tracked(*x) {
                    let gx = slot(adj, *x, xv);
                    for (i, (o, &gi)) in gx.data_mut().iter_mut().zip(g.data()).enumerate() {
                        *o += gi * rv.data()[i % n];
                    }
                }
                if self.tracked(*row) {
                    let gr = slot(adj, *row, rv);
                    for (i, (&gi, &xi)) in g.data().iter().zip(xv.data()).enumerate() {
                        gr.data_mut()[i % n] += gi * xi;
                    }
                }
            }
            Op::Scale(x, c) => {
                let gx = slot(adj, *x, self.value(*x));
                for (o, &gi) in gx.data_mut().iter_mut().zip(g.data()) {
                    *o += gi * c;
                }
            }
            Op::AddScalar(x) => {
                slot(adj, *x, self.value(*x)).add_assign(g);
            }
            Op::Unary(op, x) => {
                let xv = self.value(*x);
                let gx = slot(adj, *x, xv);
                let it = gx.data_mut().iter_mut().zip(g.data()).zip(xv.data().iter().zip(y.data()));
                for ((o, &gi), (&xi, &yi)) in it {
                    *o += gi * match op {
                        Unary::Abs => {
                            if xi > 0.0 {
                                1.0
                            } else if xi < 0.0 {
                                -1.0
                            } else {
                                0.0
                            }
                        }
                        Unary::Sigmoid => yi * (1.0 - yi),
                        Unary::Tanh => 1.0 - yi * yi,
                        Unary::Relu => {
                            if xi > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        Unary::Exp => yi,
                    };
                }
            }
            Op::Ln { x, floor } => {
                let xv = self.value(*x);
                let gx = slot(adj, *x, xv);
                for ((o, &gi), &xi) in gx.data_mut().iter_mut().zip(g.data()).zip(xv.data()) {
                    if xi > *floor {
                        *o += gi / xi;
                    }
                }
            }
            Op::Reduce(op, x) => {
                let xv = self.value(*x);
                let gi = match op {
                    Reduce::Sum => g.item(),
                    Reduce::Mean => g.item() / xv.len() as f64,
                };
                for o in slot(adj, *x, xv).data_mut() {
                    *o += gi;
                }
            }
            Op::MaxAxis { x, winners } => {
                let gx = slot(adj, *x, self.value(*x));
                for (&w, &gi) in winners.iter().zip(g.data()) {
                    gx.data_mut()[w] += gi;
                }
            }
            Op::Softmax(x) => {
                let (m, n) = (y.rows(), y.cols());
                let gx = slot(adj, *x, self.value(*x));
                for i in 0..m {
                    let yr = &y.data()[i * n..(i + 1) * n];
                    let gr = &g.data()[i * n..(i + 1) * n];
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..n {
                        gx.data_mut()[i * n + j] += yr[j] * (gr[j] - dot);
                    }
                }
            }
            Op::LayerNorm { x, rstd } => {
                let (m, n) = (y.rows(), y.cols());
                let nf = n as f64;
                let gx = slot(adj, *x, self.value(*x));
                for i in 0..m {
                    let yr = &y.data()[i * n..(i + 1) * n];
                    let gr = &g.data()[i * n..(i + 1) * n];
                    let sum_g: f64 = gr.iter().sum();
                    let sum_gy: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                    for j in 0..n {
                        gx.data_mut()[i * n + j] += rstd[i] / nf * (nf * gr[j] - sum_g - yr[j] * sum_gy);
                    }
                }
            }
            Op::SliceCols { x, start } => {
                let n = self.value(*x).cols();
                let (m, len) = (g.rows(), g.cols());
                let gx = slot(adj, *x, self.value(*x));
                for i in 0..m {
                    for j in 0..len {
                        gx.data_mut()[i * n + start + j] += g.data()[i * len + j];
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let (m, n) = (g.rows(), g.cols());
                let mut offset = 0;
                for &p in parts {
                    let c = self.value(p).cols();
                    if self.tracked(p) {
                        let gp = slot(adj, p, self.value(p));
                        for i in 0..m {
                            for j in 0..c {
                                gp.data_mut()[i * c + j] += g.data()[i * n + offset + j];
                            }
                        }
                    }
                    offset += c;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    if self.tracked(p) {
                        let gp = slot(adj, p, self.value(p));
                        for (o, &gi) in gp.data_mut().iter_mut().zip(&g.data()[offset..offset + len]) {
                            *o += gi;
                        }
                    }
                    offset += len;
                }
            }
            Op::GatherRows { x, rows } => {
                let n = g.cols();
                let gx = slot(adj, *x, self.value(*x));
                for (k, &r) in rows.iter().enumerate() {
                    for j in 0..n {
                        gx.data_mut()[r * n + j] += g.data()[k * n + j];
                    }
                }
            }
        }
    }
}

fn slot<'a>(adj: &'a mut [Option<Tensor>], v: Var, like: &Tensor) -> &'a mut Tensor {
    adj[v.0].get_or_insert_with(|| Tensor::zeros(like.shape().to_vec()))
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Grads {
    adj: Vec<Option<Tensor>>,
    params: Vec<(ParamId, Var)>,
}

impl Grads {
    /// Gradient with respect to `v`; zeros when `v` is not upstream of the loss.
    pub fn wrt(&self, tape: &Tape, v: Var) -> Tensor {
        self.adj[v.0]
            .clone()
            .unwrap_or_else(|| Tensor::zeros(tape.value(v).shape().to_vec()))
    }

    /// Gradients for every store entry; entries unused on the tape are zero.
    pub fn params(&self, store: &ParameterStore) -> ParamGrads {
        let mut out = ParamGrads::zeros(store);
        self.accumulate_params(&mut out);
        out
    }

    pub fn accumulate_params(&self, into: &mut ParamGrads) {
        for &(id, v) in &self.params {
            if let Some(g) = &self.adj[v.0] {
                into.accumulate(id, g);
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn axis_split(op: &'static str, shape: &[usize], axis: usize) -> Result<(usize, usize, usize)> {
    if axis >= shape.len() {
        return Err(TensorError::Axis {
            op,
            axis,
            rank: shape.len(),
        });
    }
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    Ok((outer, shape[axis], inner))
}

pub fn argmax_axis(v: &Tensor, axis: usize) -> Result<Vec<usize>> {
    let (outer, len, inner) = axis_split("argmax_axis", v.shape(), axis)?;
    let mut out = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        for i in 0..inner {
            let mut best = 0;
            for k in 1..len {
                if v.data()[(o * len + k) * inner + i] > v.data()[(o * len + best) * inner + i] {
                    best = k;
                }
            }
            out.push(best);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_and_abs_values() {
        let mut t = Tape::new();
        let z = t.constant(Tensor::scalar(0.0));
        let s = t.sigmoid(z);
        assert_eq!(t.value(s).item(), 0.5);
        let m = t.constant(Tensor::scalar(-3.0));
        let a = t.abs(m);
        assert_eq!(t.value(a).item(), 3.0);
    }

    #[test]
    fn max_and_sum_values() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::mat(2, 2, vec![1.0, 5.0, 3.0, 2.0]));
        let m = t.max_axis(x, 0).unwrap();
        assert_eq!(t.value(m).data(), &[3.0, 5.0]);
        assert_eq!(t.argmax_axis(x, 1).unwrap(), vec![1, 0]);
        let v = t.constant(Tensor::new([3], vec![1.0, 2.0, 3.0]).unwrap());
        let s = t.sum(v);
        assert_eq!(t.value(s).item(), 6.0);
        assert!(matches!(t.max_axis(v, 1), Err(TensorError::Axis { .. })));
    }

    #[test]
    fn max_gradient_goes_to_lowest_tied_index() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::mat(3, 1, vec![2.0, 2.0, 1.0]));
        let m = t.max_axis(x, 0).unwrap();
        let g = t.backward(m).unwrap();
        assert_eq!(g.wrt(&t, x).data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn softmax_is_stable() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row(vec![0.0, 0.0]));
        let s = t.softmax_rows(x).unwrap();
        assert_eq!(t.value(s).data(), &[0.5, 0.5]);
        let x = t.constant(Tensor::row(vec![1000.0, 0.0]));
        let s = t.softmax_rows(x).unwrap();
        assert!((t.value(s).data()[0] - 1.0).abs() < 1e-9);
        assert!(t.value(s).data()[1].abs() < 1e-9);
    }

    #[test]
    fn masked_softmax_zeroes_excluded_columns() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row(vec![1.0, 7.0, 1.0]));
        let s = t.softmax_rows_masked(x, Some(&[true, false, true])).unwrap();
        assert_eq!(t.value(s).data(), &[0.5, 0.0, 0.5]);
        assert!(t.softmax_rows_masked(x, Some(&[false, false, false])).is_err());
    }

    #[test]
    fn abs_gradient_at_zero_is_zero() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::row(vec![0.0, -2.0, 3.0]));
        let a = t.abs(x);
        let s = t.sum(a);
        let g = t.backward(s).unwrap();
        assert_eq!(g.wrt(&t, x).data(), &[0.0, -1.0, 1.0]);
    }

    #[test]
    fn disconnected_params_get_exact_zero() {
        let mut store = ParameterStore::new();
        let used = store.insert("used", Tensor::row(vec![1.0, 2.0])).unwrap();
        let unused = store.insert("unused", Tensor::row(vec![3.0])).unwrap();
        let mut t = Tape::new();
        let u = t.param(&store, used);
        let side = t.param(&store, unused);
        let _dead = t.exp(side);
        let s = t.sum(u);
        let g = t.backward(s).unwrap().params(&store);
        assert_eq!(g.get(used).data(), &[1.0, 1.0]);
        assert_eq!(g.get(unused).data(), &[0.0]);
    }

    #[test]
    fn repeated_param_registration_shares_node() {
        let mut store = ParameterStore::new();
        let w = store.insert("w", Tensor::scalar(3.0)).unwrap();
        let mut t = Tape::new();
        let a = t.param(&store, w);
        let b = t.param(&store, w);
        assert_eq!(a, b);
        let p = t.mul(a, b).unwrap();
        let g = t.backward(p).unwrap().params(&store);
        assert_eq!(g.get(w).item(), 6.0);
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::row(vec![1.0, 2.0]));
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn constants_get_no_adjoint() {
        let mut t = Tape::new();
        let c = t.constant(Tensor::scalar(2.0));
        let x = t.leaf(Tensor::scalar(5.0));
        let p = t.mul(c, x).unwrap();
        let g = t.backward(p).unwrap();
        assert_eq!(g.wrt(&t, x).item(), 2.0);
        assert_eq!(g.wrt(&t, c).item(), 0.0);
    }
}
