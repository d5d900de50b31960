//! Wengert-list reverse-mode differentiation over [`Tensor2`] values.
//!
//! Every op validates shapes, computes its forward value eagerly, and refuses
//! to record a non-finite result. `backward` walks the list once in reverse;
//! a value consumed at several sites receives the sum of its gradient
//! contributions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::Tensor2;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Affine { x: Var, w: Var, b: Var },
    Relu { x: Var },
    L2Normalize { x: Var, norms: Vec<f64> },
    ConcatCols { a: Var, b: Var },
    SliceCols { x: Var, start: usize },
    Clamp { x: Var, lo: f64, hi: f64 },
    Reparameterize { mu: Var, logvar: Var, eps: Tensor2 },
    MatmulNt { a: Var, b: Var },
    ScaleByInvExp { x: Var, log_scale: Var },
    Transpose { x: Var },
    CrossEntropyDiag { x: Var, softmax: Tensor2 },
    Mse { a: Var, b: Var },
    SortRows { x: Var, perm: Vec<usize> },
    KlStdNormal { mu: Var, logvar: Var },
    Sum { x: Var },
    SumSquares { x: Var },
    LinearCombination { terms: Vec<(Var, f64)> },
}

/// One recorded value together with the rule that produced it.
#[derive(Debug)]
pub struct TapeNode {
    value: Tensor2,
    op: Op,
    param: Option<String>,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<TapeNode>,
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}

/// Sorts ascending, ties broken by original index. Returns the sorted values
/// and the permutation with `sorted[k] == values[perm[k]]`.
pub fn sort_ascending(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..values.len()).collect();
    perm.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted = perm.iter().map(|&i| values[i]).collect();
    (sorted, perm)
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor2, op: Op, what: &'static str) -> Result<Var> {
        if !value.all_finite() {
            return Err(Error::NonFiniteValue(what));
        }
        self.nodes.push(TapeNode {
            value,
            op,
            param: None,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records a value that receives no gradient name.
    pub fn constant(&mut self, value: Tensor2) -> Result<Var> {
        self.push(value, Op::Leaf, "constant")
    }

    /// Records a named trainable leaf.
    pub fn param(&mut self, name: &str, value: Tensor2) -> Result<Var> {
        let v = self.push(value, Op::Leaf, "parameter")?;
        self.nodes[v.0].param = Some(name.to_owned());
        Ok(v)
    }

    /// `x·W + b`, with `b` a `1 x m` row broadcast over the batch.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if xv.cols() != wv.rows() || bv.shape() != (1, wv.cols()) {
            return Err(shape_err(
                "affine",
                format!(
                    "x {:?}, W {:?}, b {:?}",
                    xv.shape(),
                    wv.shape(),
                    bv.shape()
                ),
            ));
        }
        let mut y = xv.matmul(wv);
        for r in 0..y.rows() {
            for (o, &bias) in y.row_mut(r).iter_mut().zip(bv.data()) {
                *o += bias;
            }
        }
        self.push(y, Op::Affine { x, w, b }, "affine")
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let y = self.value(x).map(|v| v.max(0.0));
        self.push(y, Op::Relu { x }, "relu")
    }

    pub fn l2_normalize_rows(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let mut y = xv.clone();
        let mut norms = Vec::with_capacity(xv.rows());
        for r in 0..xv.rows() {
            let n = xv.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
            if n <= 1e-12 {
                return Err(Error::NearZeroRow { row: r });
            }
            y.row_mut(r).iter_mut().for_each(|v| *v /= n);
            norms.push(n);
        }
        self.push(y, Op::L2Normalize { x, norms }, "l2_normalize_rows")
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != bv.rows() {
            return Err(shape_err(
                "concat_cols",
                format!("{:?} vs {:?}", av.shape(), bv.shape()),
            ));
        }
        let cols = av.cols() + bv.cols();
        let mut data = Vec::with_capacity(av.rows() * cols);
        for r in 0..av.rows() {
            data.extend_from_slice(av.row(r));
            data.extend_from_slice(bv.row(r));
        }
        let y = Tensor2::from_vec(av.rows(), cols, data)?;
        self.push(y, Op::ConcatCols { a, b }, "concat_cols")
    }

    /// Columns `start..start + width`.
    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Result<Var> {
        let xv = self.value(x);
        if start + width > xv.cols() {
            return Err(shape_err(
                "slice_cols",
                format!("{start}..{} of {} columns", start + width, xv.cols()),
            ));
        }
        let mut data = Vec::with_capacity(xv.rows() * width);
        for r in 0..xv.rows() {
            data.extend_from_slice(&xv.row(r)[start..start + width]);
        }
        let y = Tensor2::from_vec(xv.rows(), width, data)?;
        self.push(y, Op::SliceCols { x, start }, "slice_cols")
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        let y = self.value(x).map(|v| v.clamp(lo, hi));
        self.push(y, Op::Clamp { x, lo, hi }, "clamp")
    }

    /// `mu + exp(logvar / 2) * eps` with `eps` held constant.
    pub fn reparameterize(&mut self, mu: Var, logvar: Var, eps: Tensor2) -> Result<Var> {
        let (mv, lv) = (self.value(mu), self.value(logvar));
        if mv.shape() != lv.shape() || mv.shape() != eps.shape() {
            return Err(shape_err(
                "reparameterize",
                format!("mu {:?}, logvar {:?}, eps {:?}", mv.shape(), lv.shape(), eps.shape()),
            ));
        }
        let mut z = mv.clone();
        for ((o, &l), &e) in z.data_mut().iter_mut().zip(lv.data()).zip(eps.data()) {
            *o += (0.5 * l).exp() * e;
        }
        self.push(z, Op::Reparameterize { mu, logvar, eps }, "reparameterize")
    }

    /// `a · bᵀ`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.cols() {
            return Err(shape_err(
                "matmul_nt",
                format!("{:?} vs {:?}", av.shape(), bv.shape()),
            ));
        }
        let y = av.matmul_nt(bv);
        self.push(y, Op::MatmulNt { a, b }, "matmul_nt")
    }

    /// `x · exp(-s)` for a scalar `s`; dividing by a positive temperature
    /// stored in log space.
    pub fn scale_by_inv_exp(&mut self, x: Var, log_scale: Var) -> Result<Var> {
        let s = self.value(log_scale);
        if s.shape() != (1, 1) {
            return Err(shape_err("scale_by_inv_exp", format!("scale {:?}", s.shape())));
        }
        let k = (-s.item()).exp();
        let y = self.value(x).map(|v| v * k);
        self.push(y, Op::ScaleByInvExp { x, log_scale }, "scale_by_inv_exp")
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let y = self.value(x).transpose();
        self.push(y, Op::Transpose { x }, "transpose")
    }

    /// Row-mean softmax cross-entropy of a square logit matrix whose target
    /// for row `i` is column `i`.
    pub fn cross_entropy_diag(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let n = xv.rows();
        if n == 0 || xv.cols() != n {
            return Err(shape_err("cross_entropy_diag", format!("{:?}", xv.shape())));
        }
        let mut softmax = Tensor2::zeros(n, n);
        let mut total = 0.0;
        for i in 0..n {
            let row = xv.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let lse = max + denom.ln();
            total += lse - row[i];
            for (o, v) in softmax.row_mut(i).iter_mut().zip(row) {
                *o = (v - max).exp() / denom;
            }
        }
        let y = Tensor2::scalar(total / n as f64);
        self.push(y, Op::CrossEntropyDiag { x, softmax }, "cross_entropy_diag")
    }

    /// Mean of squared differences over all elements.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() || av.is_empty() {
            return Err(shape_err("mse", format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let s: f64 = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        let y = Tensor2::scalar(s / av.len() as f64);
        self.push(y, Op::Mse { a, b }, "mse")
    }

    /// Sorts every row ascending; gradients scatter back through the
    /// per-row permutation.
    pub fn sort_rows(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let cols = xv.cols();
        let mut y = Tensor2::zeros(xv.rows(), cols);
        let mut perm = Vec::with_capacity(xv.len());
        for r in 0..xv.rows() {
            let (sorted, p) = sort_ascending(xv.row(r));
            y.row_mut(r).copy_from_slice(&sorted);
            perm.extend(p);
        }
        self.push(y, Op::SortRows { x, perm }, "sort_rows")
    }

    /// Batch mean of `KL(N(mu, exp(logvar)) || N(0, I))`.
    pub fn kl_std_normal(&mut self, mu: Var, logvar: Var) -> Result<Var> {
        let (mv, lv) = (self.value(mu), self.value(logvar));
        if mv.shape() != lv.shape() || mv.rows() == 0 {
            return Err(shape_err(
                "kl_std_normal",
                format!("{:?} vs {:?}", mv.shape(), lv.shape()),
            ));
        }
        let s: f64 = mv
            .data()
            .iter()
            .zip(lv.data())
            .map(|(m, l)| 0.5 * (m * m + l.exp() - 1.0 - l))
            .sum();
        let y = Tensor2::scalar(s / mv.rows() as f64);
        self.push(y, Op::KlStdNormal { mu, logvar }, "kl_std_normal")
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let y = Tensor2::scalar(self.value(x).sum());
        self.push(y, Op::Sum { x }, "sum")
    }

    pub fn sum_squares(&mut self, x: Var) -> Result<Var> {
        let y = Tensor2::scalar(self.value(x).data().iter().map(|v| v * v).sum());
        self.push(y, Op::SumSquares { x }, "sum_squares")
    }

    /// `Σ w_k · s_k` over scalar vars.
    pub fn linear_combination(&mut self, terms: &[(Var, f64)]) -> Result<Var> {
        let mut acc = 0.0;
        for &(v, w) in terms {
            let t = self.value(v);
            if t.shape() != (1, 1) {
                return Err(shape_err("linear_combination", format!("term {:?}", t.shape())));
            }
            acc += w * t.item();
        }
        self.push(
            Tensor2::scalar(acc),
            Op::LinearCombination {
                terms: terms.to_vec(),
            },
            "linear_combination",
        )
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(shape_err("backward", format!("loss {:?}", lv.shape())));
        }
        let mut grads: Vec<Option<Tensor2>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor2::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            let y = &node.value;
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::Affine { x, w, b } => {
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    accumulate(&mut grads, *x, dy.matmul_nt(wv));
                    accumulate(&mut grads, *w, xv.matmul_tn(&dy));
                    let mut db = Tensor2::zeros(1, dy.cols());
                    for row in dy.iter_rows() {
                        for (o, g) in db.data_mut().iter_mut().zip(row) {
                            *o += g;
                        }
                    }
                    accumulate(&mut grads, *b, db);
                }
                Op::Relu { x } => {
                    let xv = self.value(*x);
                    let mut dx = dy;
                    for (g, &v) in dx.data_mut().iter_mut().zip(xv.data()) {
                        if v <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::L2Normalize { x, norms } => {
                    let mut dx = Tensor2::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let yr = y.row(r);
                        let gr = dy.row(r);
                        let proj: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((o, &yy), &g) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *o = (g - yy * proj) / norms[r];
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::ConcatCols { a, b } => {
                    let ac = self.value(*a).cols();
                    let bc = self.value(*b).cols();
                    let mut da = Tensor2::zeros(dy.rows(), ac);
                    let mut db = Tensor2::zeros(dy.rows(), bc);
                    for r in 0..dy.rows() {
                        let row = dy.row(r);
                        da.row_mut(r).copy_from_slice(&row[..ac]);
                        db.row_mut(r).copy_from_slice(&row[ac..]);
                    }
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::SliceCols { x, start } => {
                    let xv = self.value(*x);
                    let mut dx = Tensor2::zeros(xv.rows(), xv.cols());
                    let w = dy.cols();
                    for r in 0..dy.rows() {
                        dx.row_mut(r)[*start..start + w].copy_from_slice(dy.row(r));
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Clamp { x, lo, hi } => {
                    let xv = self.value(*x);
                    let mut dx = dy;
                    for (g, &v) in dx.data_mut().iter_mut().zip(xv.data()) {
                        if v < *lo || v > *hi {
                            *g = 0.0;
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Reparameterize { mu, logvar, eps } => {
                    let lv = self.value(*logvar);
                    let mut dlv = dy.clone();
                    for ((g, &l), &e) in dlv.data_mut().iter_mut().zip(lv.data()).zip(eps.data()) {
                        *g *= 0.5 * (0.5 * l).exp() * e;
                    }
                    accumulate(&mut grads, *mu, dy);
                    accumulate(&mut grads, *logvar, dlv);
                }
                Op::MatmulNt { a, b } => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    accumulate(&mut grads, *a, dy.matmul(bv));
                    accumulate(&mut grads, *b, dy.matmul_tn(av));
                }
                Op::ScaleByInvExp { x, log_scale } => {
                    let k = (-self.value(*log_scale).item()).exp();
                    let ds: f64 = -dy.data().iter().zip(y.data()).map(|(g, v)| g * v).sum::<f64>();
                    accumulate(&mut grads, *x, dy.map(|g| g * k));
                    accumulate(&mut grads, *log_scale, Tensor2::scalar(ds));
                }
                Op::Transpose { x } => {
                    accumulate(&mut grads, *x, dy.transpose());
                }
                Op::CrossEntropyDiag { x, softmax } => {
                    let n = softmax.rows();
                    let scale = dy.item() / n as f64;
                    let mut dx = softmax.clone();
                    for i in 0..n {
                        let v = dx.get(i, i);
                        dx.set(i, i, v - 1.0);
                    }
                    dx.data_mut().iter_mut().for_each(|g| *g *= scale);
                    accumulate(&mut grads, *x, dx);
                }
                Op::Mse { a, b } => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let scale = 2.0 * dy.item() / av.len() as f64;
                    let mut da = av.clone();
                    for (o, &t) in da.data_mut().iter_mut().zip(bv.data()) {
                        *o = scale * (*o - t);
                    }
                    let db = da.map(|g| -g);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::SortRows { x, perm } => {
                    let cols = dy.cols();
                    let mut dx = Tensor2::zeros(dy.rows(), cols);
                    for r in 0..dy.rows() {
                        let p = &perm[r * cols..(r + 1) * cols];
                        let g = dy.row(r);
                        let out = dx.row_mut(r);
                        for (k, &src) in p.iter().enumerate() {
                            out[src] += g[k];
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::KlStdNormal { mu, logvar } => {
                    let mv = self.value(*mu);
                    let lv = self.value(*logvar);
                    let scale = dy.item() / mv.rows() as f64;
                    accumulate(&mut grads, *mu, mv.map(|m| scale * m));
                    accumulate(&mut grads, *logvar, lv.map(|l| scale * 0.5 * (l.exp() - 1.0)));
                }
                Op::Sum { x } => {
                    let (r, c) = self.value(*x).shape();
                    accumulate(&mut grads, *x, Tensor2::filled(r, c, dy.item()));
                }
                Op::SumSquares { x } => {
                    let g = dy.item();
                    accumulate(&mut grads, *x, self.value(*x).map(|v| 2.0 * g * v));
                }
                Op::LinearCombination { terms } => {
                    for &(v, w) in terms {
                        accumulate(&mut grads, v, Tensor2::scalar(w * dy.item()));
                    }
                }
            }
        }

        // Only leaves still hold gradients; interior entries were consumed.
        let mut out = Gradients {
            per_node: vec![None; self.nodes.len()],
            by_param: BTreeMap::new(),
        };
        for (i, g) in grads.into_iter().enumerate() {
            if matches!(self.nodes[i].op, Op::Leaf) {
                if let Some(g) = g {
                    if let Some(name) = &self.nodes[i].param {
                        out.by_param
                            .entry(name.clone())
                            .and_modify(|acc: &mut Tensor2| acc.add_assign(&g))
                            .or_insert_with(|| g.clone());
                    }
                    out.per_node[i] = Some(g);
                }
            }
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Tensor2>], v: Var, g: Tensor2) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Result of a reverse sweep.
#[derive(Debug)]
pub struct Gradients {
    per_node: Vec<Option<Tensor2>>,
    by_param: BTreeMap<String, Tensor2>,
}

impl Gradients {
    /// Gradient of the loss with respect to a leaf, if it was reached.
    pub fn wrt(&self, v: Var) -> Option<&Tensor2> {
        self.per_node.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn params(&self) -> &BTreeMap<String, Tensor2> {
        &self.by_param
    }

    pub fn into_params(self) -> BTreeMap<String, Tensor2> {
        self.by_param
    }
}
