//! Reverse-mode autodiff over `f64` matrices.
//!
//! A [`Tape`] records a DAG of matrix ops; [`Tape::backward`] walks it in
//! reverse and accumulates gradients for every node that (transitively)
//! depends on a trainable parameter leaf. All values are `ndarray::Array2`;
//! scalars are 1x1 matrices. The op set is exactly what the transformer
//! blocks and losses in this crate need.

use ndarray::{Array2, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Const,
    Param(String),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    /// `x (n,d) + row (1,d)` broadcast over rows.
    AddRow(Var, Var),
    /// `x (n,d) * row (1,d)` broadcast over rows (Hadamard).
    MulRow(Var, Var),
    Scale(Var, f64),
    /// Row-wise softmax.
    Softmax(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
    },
    Gelu(Var),
    Transpose(Var),
    ConcatRows(Vec<Var>),
    SliceRows {
        x: Var,
        start: usize,
        len: usize,
    },
    ConcatCols(Vec<Var>),
    SliceCols {
        x: Var,
        start: usize,
        len: usize,
    },
    /// Mean over rows: `(n,d) -> (1,d)`.
    MeanRows(Var),
    /// Row gather: `out[i] = table[ids[i]]`.
    Gather {
        table: Var,
        ids: Vec<usize>,
    },
    /// Row-wise L2 normalization.
    NormalizeRows(Var),
    /// Mean squared error against a constant target; scalar output.
    MseLoss {
        pred: Var,
        target: Array2<f64>,
    },
    /// Bidirectional margin ranking loss over a similarity matrix
    /// `S[i][j] = sim(text_i, motion_j)`; scalar output.
    HingeRetrieval {
        scores: Var,
        margin: f64,
    },
}

struct Node {
    value: Array2<f64>,
    op: Op,
    requires_grad: bool,
}

const LN_EPS: f64 = 1e-5;
const NORM_EPS: f64 = 1e-12;

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by one backward pass.
pub struct Grads {
    grads: Vec<Option<Array2<f64>>>,
}

impl Grads {
    pub fn wrt(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads[v.0].as_ref()
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

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn req(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Const, false)
    }

    /// A named trainable leaf. Pass `trainable = false` for frozen
    /// parameters: they stay out of the gradient flow entirely.
    pub fn param(&mut self, name: &str, value: Array2<f64>, trainable: bool) -> Var {
        self.push(value, Op::Param(name.to_string()), trainable)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ra, ca) = self.value(a).dim();
        let (rb, cb) = self.value(b).dim();
        assert_eq!(ca, rb, "matmul shape mismatch: ({ra},{ca}) x ({rb},{cb})");
        let value = self.value(a).dot(self.value(b));
        let rg = self.req(a) || self.req(b);
        self.push(value, Op::MatMul(a, b), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.value(a).dim(), self.value(b).dim(), "add shape mismatch");
        let value = self.value(a) + self.value(b);
        let rg = self.req(a) || self.req(b);
        self.push(value, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.value(a).dim(), self.value(b).dim(), "sub shape mismatch");
        let value = self.value(a) - self.value(b);
        let rg = self.req(a) || self.req(b);
        self.push(value, Op::Sub(a, b), rg)
    }

    pub fn add_row(&mut self, x: Var, row: Var) -> Var {
        let (_, d) = self.value(x).dim();
        let (rr, rd) = self.value(row).dim();
        assert_eq!((rr, rd), (1, d), "add_row expects a (1,{d}) row");
        let value = self.value(x) + &self.value(row).row(0);
        let rg = self.req(x) || self.req(row);
        self.push(value, Op::AddRow(x, row), rg)
    }

    pub fn mul_row(&mut self, x: Var, row: Var) -> Var {
        let (_, d) = self.value(x).dim();
        let (rr, rd) = self.value(row).dim();
        assert_eq!((rr, rd), (1, d), "mul_row expects a (1,{d}) row");
        let value = self.value(x) * &self.value(row).row(0);
        let rg = self.req(x) || self.req(row);
        self.push(value, Op::MulRow(x, row), rg)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let value = self.value(x) * c;
        let rg = self.req(x);
        self.push(value, Op::Scale(x, c), rg)
    }

    pub fn softmax(&mut self, x: Var) -> Var {
        let mut value = self.value(x).clone();
        for mut row in value.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        let rg = self.req(x);
        self.push(value, Op::Softmax(x), rg)
    }

    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let (_, d) = self.value(x).dim();
        assert_eq!(self.value(gamma).dim(), (1, d));
        assert_eq!(self.value(beta).dim(), (1, d));
        let mut value = self.value(x).clone();
        for mut row in value.rows_mut() {
            let mean = row.mean().unwrap();
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mean) * inv;
            }
        }
        let value = &value * self.value(gamma).broadcast(value.dim()).unwrap().to_owned()
            + self.value(beta).broadcast(value.dim()).unwrap().to_owned();
        let rg = self.req(x) || self.req(gamma) || self.req(beta);
        self.push(value, Op::LayerNorm { x, gamma, beta }, rg)
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let value = self.value(x).mapv(gelu_scalar);
        let rg = self.req(x);
        self.push(value, Op::Gelu(x), rg)
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let value = self.value(x).t().to_owned();
        let rg = self.req(x);
        self.push(value, Op::Transpose(x), rg)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let views: Vec<_> = parts.iter().map(|v| self.value(*v).view()).collect();
        let value = ndarray::concatenate(Axis(0), &views).expect("row concat");
        let rg = parts.iter().any(|v| self.req(*v));
        self.push(value, Op::ConcatRows(parts.to_vec()), rg)
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Var {
        let value = self.value(x).slice(ndarray::s![start..start + len, ..]).to_owned();
        let rg = self.req(x);
        self.push(value, Op::SliceRows { x, start, len }, rg)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let views: Vec<_> = parts.iter().map(|v| self.value(*v).view()).collect();
        let value = ndarray::concatenate(Axis(1), &views).expect("col concat");
        let rg = parts.iter().any(|v| self.req(*v));
        self.push(value, Op::ConcatCols(parts.to_vec()), rg)
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let value = self.value(x).slice(ndarray::s![.., start..start + len]).to_owned();
        let rg = self.req(x);
        self.push(value, Op::SliceCols { x, start, len }, rg)
    }

    pub fn mean_rows(&mut self, x: Var) -> Var {
        let value = self
            .value(x)
            .mean_axis(Axis(0))
            .expect("non-empty")
            .insert_axis(Axis(0));
        let rg = self.req(x);
        self.push(value, Op::MeanRows(x), rg)
    }

    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut value = Array2::zeros((ids.len(), t.ncols()));
        for (i, &id) in ids.iter().enumerate() {
            value.row_mut(i).assign(&t.row(id));
        }
        let rg = self.req(table);
        self.push(value, Op::Gather { table, ids: ids.to_vec() }, rg)
    }

    pub fn normalize_rows(&mut self, x: Var) -> Var {
        let mut value = self.value(x).clone();
        for mut row in value.rows_mut() {
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_EPS);
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        let rg = self.req(x);
        self.push(value, Op::NormalizeRows(x), rg)
    }

    pub fn mse_loss(&mut self, pred: Var, target: &Array2<f64>) -> Var {
        assert_eq!(self.value(pred).dim(), target.dim(), "mse shape mismatch");
        let diff = self.value(pred) - target;
        let mse = diff.iter().map(|v| v * v).sum::<f64>() / diff.len() as f64;
        let rg = self.req(pred);
        self.push(
            Array2::from_elem((1, 1), mse),
            Op::MseLoss { pred, target: target.clone() },
            rg,
        )
    }

    pub fn hinge_retrieval(&mut self, scores: Var, margin: f64) -> Var {
        let s = self.value(scores);
        let b = s.nrows();
        assert_eq!(s.ncols(), b, "hinge expects a square score matrix");
        assert!(b >= 2, "hinge needs at least two pairs");
        let mut total = 0.0;
        for i in 0..b {
            for j in 0..b {
                if i == j {
                    continue;
                }
                total += (margin - s[(i, i)] + s[(i, j)]).max(0.0);
                total += (margin - s[(j, j)] + s[(i, j)]).max(0.0);
            }
        }
        let count = (2 * b * (b - 1)) as f64;
        let rg = self.req(scores);
        self.push(
            Array2::from_elem((1, 1), total / count),
            Op::HingeRetrieval { scores, margin },
            rg,
        )
    }

    /// Reverse pass from a scalar loss node.
    pub fn backward(&self, loss: Var) -> Grads {
        assert_eq!(self.value(loss).dim(), (1, 1), "backward starts from a scalar");
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Array2::ones((1, 1)));
        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let Some(dy) = grads[idx].take() else { continue };
            self.accumulate(idx, &dy, &mut grads);
            grads[idx] = Some(dy);
        }
        Grads { grads }
    }

    fn add_grad(grads: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
        match &mut grads[v.0] {
            Some(acc) => *acc += &g,
            slot => *slot = Some(g),
        }
    }

    fn accumulate(&self, idx: usize, dy: &Array2<f64>, grads: &mut [Option<Array2<f64>>]) {
        match &self.nodes[idx].op {
            Op::Const | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                if self.req(*a) {
                    let g = dy.dot(&self.value(*b).t());
                    Self::add_grad(grads, *a, g);
                }
                if self.req(*b) {
                    let g = self.value(*a).t().dot(dy);
                    Self::add_grad(grads, *b, g);
                }
            }
            Op::Add(a, b) => {
                if self.req(*a) {
                    Self::add_grad(grads, *a, dy.clone());
                }
                if self.req(*b) {
                    Self::add_grad(grads, *b, dy.clone());
                }
            }
            Op::Sub(a, b) => {
                if self.req(*a) {
                    Self::add_grad(grads, *a, dy.clone());
                }
                if self.req(*b) {
                    Self::add_grad(grads, *b, -dy.clone());
                }
            }
            Op::AddRow(x, row) => {
                if self.req(*x) {
                    Self::add_grad(grads, *x, dy.clone());
                }
                if self.req(*row) {
                    let g = dy.sum_axis(Axis(0)).insert_axis(Axis(0));
                    Self::add_grad(grads, *row, g);
                }
            }
            Op::MulRow(x, row) => {
                if self.req(*x) {
                    let g = dy * &self.value(*row).row(0);
                    Self::add_grad(grads, *x, g);
                }
                if self.req(*row) {
                    let g = (dy * self.value(*x)).sum_axis(Axis(0)).insert_axis(Axis(0));
                    Self::add_grad(grads, *row, g);
                }
            }
            Op::Scale(x, c) => {
                if self.req(*x) {
                    Self::add_grad(grads, *x, dy * *c);
                }
            }
            Op::Softmax(x) => {
                if self.req(*x) {
                    let y = &self.nodes[idx].value;
                    let mut g = Array2::zeros(y.dim());
                    for ((mut gi, yi), di) in
                        g.rows_mut().into_iter().zip(y.rows()).zip(dy.rows())
                    {
                        let dot: f64 = yi.iter().zip(di.iter()).map(|(a, b)| a * b).sum();
                        for ((gv, &yv), &dv) in gi.iter_mut().zip(yi.iter()).zip(di.iter()) {
                            *gv = yv * (dv - dot);
                        }
                    }
                    Self::add_grad(grads, *x, g);
                }
            }
            Op::LayerNorm { x, gamma, beta } => {
                let xv = self.value(*x);
                let gv = self.value(*gamma);
                let d = xv.ncols() as f64;
                // Recompute per-row statistics.
                let mut dx = Array2::zeros(xv.dim());
                let mut dgamma = Array2::zeros((1, xv.ncols()));
                let mut dbeta = Array2::zeros((1, xv.ncols()));
                for (r, row) in xv.rows().into_iter().enumerate() {
                    let mean = row.mean().unwrap();
                    let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
                    let inv = 1.0 / (var + LN_EPS).sqrt();
                    let xhat: Vec<f64> = row.iter().map(|v| (v - mean) * inv).collect();
                    let dyr = dy.row(r);
                    let mut dxhat = vec![0.0; xhat.len()];
                    for c in 0..xhat.len() {
                        dxhat[c] = dyr[c] * gv[(0, c)];
                        dgamma[(0, c)] += dyr[c] * xhat[c];
                        dbeta[(0, c)] += dyr[c];
                    }
                    let sum_dxhat: f64 = dxhat.iter().sum();
                    let sum_dxhat_xhat: f64 =
                        dxhat.iter().zip(&xhat).map(|(a, b)| a * b).sum();
                    for c in 0..xhat.len() {
                        dx[(r, c)] =
                            inv / d * (d * dxhat[c] - sum_dxhat - xhat[c] * sum_dxhat_xhat);
                    }
                }
                if self.req(*x) {
                    Self::add_grad(grads, *x, dx);
                }
                if self.req(*gamma) {
                    Self::add_grad(grads, *gamma, dgamma);
                }
                if self.req(*beta) {
                    Self::add_grad(grads, *beta, dbeta);
                }
            }
            Op::Gelu(x) => {
                if self.req(*x) {
                    let g = self.value(*x).mapv(gelu_grad_scalar) * dy;
                    Self::add_grad(grads, *x, g);
                }
            }
            Op::Transpose(x) => {
                if self.req(*x) {
                    Self::add_grad(grads, *x, dy.t().to_owned());
                }
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                for p in parts {
                    let rows = self.value(*p).nrows();
                    if self.req(*p) {
                        let g = dy.slice(ndarray::s![start..start + rows, ..]).to_owned();
                        Self::add_grad(grads, *p, g);
                    }
                    start += rows;
                }
            }
            Op::SliceRows { x, start, len } => {
                if self.req(*x) {
                    let mut g = Array2::zeros(self.value(*x).dim());
                    g.slice_mut(ndarray::s![*start..*start + *len, ..]).assign(dy);
                    Self::add_grad(grads, *x, g);
                }
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for p in parts {
                    let cols = self.value(*p).ncols();
                    if self.req(*p) {
                        let g = dy.slice(ndarray::s![.., start..start + cols]).to_owned();
                        Self::add_grad(grads, *p, g);
                    }
                    start += cols;
                }
            }
            Op::SliceCols { x, start, len } => {
                if self.req(*x) {
                    let mut g = Array2::zeros(self.value(*x).dim());
                    g.slice_mut(ndarray::s![.., *start..*start + *len]).assign(dy);
                    Self::add_grad(grads, *x, g);
                }
            }
            Op::MeanRows(x) => {
                if self.req(*x) {
                    let n = self.value(*x).nrows() as f64;
                    let mut g = Array2::zeros(self.value(*x).dim());
                    for mut row in g.rows_mut() {
                        row.assign(&(dy.row(0).to_owned() / n));
                    }
                    Self::add_grad(grads, *x, g);
                }
            }
            Op::Gather { table, ids } => {
                if self.req(*table) {
                    let mut g = Array2::zeros(self.value(*table).dim());
                    for (i, &id) in ids.iter().enumerate() {
                        let mut row = g.row_mut(id);
                        row += &dy.row(i);
                    }
                    Self::add_grad(grads, *table, g);
                }
            }
            Op::NormalizeRows(x) => {
                if self.req(*x) {
                    let xv = self.value(*x);
                    let yv = &self.nodes[idx].value;
                    let mut g = Array2::zeros(xv.dim());
                    for r in 0..xv.nrows() {
                        let n = xv.row(r).iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_EPS);
                        let dot: f64 =
                            dy.row(r).iter().zip(yv.row(r).iter()).map(|(a, b)| a * b).sum();
                        for c in 0..xv.ncols() {
                            g[(r, c)] = (dy[(r, c)] - yv[(r, c)] * dot) / n;
                        }
                    }
                    Self::add_grad(grads, *x, g);
                }
            }
            Op::MseLoss { pred, target } => {
                if self.req(*pred) {
                    let scale = 2.0 * dy[(0, 0)] / target.len() as f64;
                    let g = (self.value(*pred) - target) * scale;
                    Self::add_grad(grads, *pred, g);
                }
            }
            Op::HingeRetrieval { scores, margin } => {
                if self.req(*scores) {
                    let s = self.value(*scores);
                    let b = s.nrows();
                    let w = dy[(0, 0)] / (2 * b * (b - 1)) as f64;
                    let mut g = Array2::zeros(s.dim());
                    for i in 0..b {
                        for j in 0..b {
                            if i == j {
                                continue;
                            }
                            if *margin - s[(i, i)] + s[(i, j)] > 0.0 {
                                g[(i, j)] += w;
                                g[(i, i)] -= w;
                            }
                            if *margin - s[(j, j)] + s[(i, j)] > 0.0 {
                                g[(i, j)] += w;
                                g[(j, j)] -= w;
                            }
                        }
                    }
                    Self::add_grad(grads, *scores, g);
                }
            }
        }
    }

    /// Collects gradients of named parameter leaves.
    pub fn param_grads(&self, grads: &Grads) -> std::collections::BTreeMap<String, Array2<f64>> {
        let mut out = std::collections::BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let Op::Param(name) = &node.op {
                if let Some(g) = &grads.grads[i] {
                    out.entry(name.clone())
                        .and_modify(|acc: &mut Array2<f64>| *acc += g)
                        .or_insert_with(|| g.clone());
                }
            }
        }
        out
    }
}

fn gelu_scalar(x: f64) -> f64 {
    const C: f64 = 0.7978845608028654; // sqrt(2/pi)
    const A: f64 = 0.044715;
    0.5 * x * (1.0 + (C * (x + A * x.powi(3))).tanh())
}

fn gelu_grad_scalar(x: f64) -> f64 {
    const C: f64 = 0.7978845608028654;
    const A: f64 = 0.044715;
    let u = C * (x + A * x.powi(3));
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * C * (1.0 + 3.0 * A * x * x)
}
