//! Append-only computation graph with reverse-mode differentiation.
//!
//! Every operation evaluates eagerly and records itself. [`Graph::grad`]
//! builds the adjoint computation out of the same recorded operations, so a
//! gradient is itself a node that can be differentiated again. The gradient
//! penalty of WGAN-gp relies on this.

use super::tensor::{matmul, Tensor};
use crate::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    MatMul { a: Var, b: Var, ta: bool, tb: bool },
    AddRow { x: Var, row: Var },
    SumRows(Var),
    BroadcastRows { x: Var },
    SumCols(Var),
    BroadcastCols { x: Var },
    Sum(Var),
    Fill { x: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Exp(Var),
    Log(Var),
    Sqrt(Var),
    Sigmoid(Var),
    LeakyRelu { x: Var, slope: f64 },
    // Adjoint of LeakyRelu: `g * (x >= 0 ? 1 : slope)`. Zero derivative in `x`.
    LeakyReluGrad { g: Var, x: Var, slope: f64 },
    Clamp { x: Var, lo: f64, hi: f64 },
    // Adjoint of Clamp: `g` inside `[lo, hi]`, zero outside. Zero derivative in `x`.
    ClampGrad { g: Var, x: Var, lo: f64, hi: f64 },
    ConcatCols(Var, Var),
    SliceCols { x: Var, start: usize },
    PadCols { x: Var, start: usize },
}

impl Op {
    /// Inputs through which derivatives flow.
    fn diff_inputs(&self) -> [Option<Var>; 2] {
        use Op::*;
        match *self {
            Leaf => [None, None],
            MatMul { a, b, .. } => [Some(a), Some(b)],
            AddRow { x, row } => [Some(x), Some(row)],
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | ConcatCols(a, b) => [Some(a), Some(b)],
            SumRows(x)
            | BroadcastRows { x, .. }
            | SumCols(x)
            | BroadcastCols { x, .. }
            | Sum(x)
            | Fill { x, .. }
            | Scale(x, _)
            | AddScalar(x)
            | Exp(x)
            | Log(x)
            | Sqrt(x)
            | Sigmoid(x)
            | LeakyRelu { x, .. }
            | Clamp { x, .. }
            | SliceCols { x, .. }
            | PadCols { x, .. } => [Some(x), None],
            LeakyReluGrad { g, .. } | ClampGrad { g, .. } => [Some(g), None],
        }
    }
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Adjoints of every leaf an output depends on, as graph nodes.
#[derive(Debug, Clone)]
pub struct Gradients {
    pairs: Vec<(Var, Var)>,
}

impl Gradients {
    pub fn get(&self, leaf: Var) -> Option<Var> {
        self.pairs.iter().find(|(l, _)| *l == leaf).map(|(_, g)| *g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, Var)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn same_dims(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::shape(op, a.shape(), b.shape()));
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
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

    /// Value of a one-element node; panics otherwise.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)
            .item()
            .unwrap_or_else(|| panic!("node {} is not scalar", v.0))
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    /// Parameters, inputs and constants all enter the graph as leaves.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn is_leaf(&self, v: Var) -> bool {
        matches!(self.nodes[v.0].op, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_t(a, b, false, false)
    }

    /// `op(a) * op(b)`, transposing either side on request.
    pub fn matmul_t(&mut self, a: Var, b: Var, ta: bool, tb: bool) -> Result<Var> {
        let v = matmul(self.value(a), self.value(b), ta, tb)?;
        Ok(self.push(Op::MatMul { a, b, ta, tb }, v))
    }

    /// Add a `1 x c` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (xt, rt) = (self.value(x), self.value(row));
        let (r, c) = xt.dims();
        if rt.dims() != (1, c) {
            return Err(Error::shape("add_row", xt.shape(), rt.shape()));
        }
        let mut data = xt.data().to_vec();
        for i in 0..r {
            for (d, b) in data[i * c..(i + 1) * c].iter_mut().zip(rt.data()) {
                *d += b;
            }
        }
        let v = Tensor::matrix(r, c, data)?;
        Ok(self.push(Op::AddRow { x, row }, v))
    }

    /// `input * weight + bias`.
    pub fn affine(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let (n_in, n_out) = self.value(weight).dims();
        let (_, c) = self.value(input).dims();
        if c != n_in {
            return Err(Error::shape(
                "affine",
                self.value(input).shape(),
                self.value(weight).shape(),
            ));
        }
        if self.value(bias).dims() != (1, n_out) {
            return Err(Error::shape(
                "affine",
                self.value(weight).shape(),
                self.value(bias).shape(),
            ));
        }
        let xw = self.matmul(input, weight)?;
        self.add_row(xw, bias)
    }

    /// Column sums as a `1 x c` row.
    pub fn sum_rows(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let (r, c) = t.dims();
        let mut out = vec![0.0; c];
        for i in 0..r {
            for (o, v) in out.iter_mut().zip(&t.data()[i * c..(i + 1) * c]) {
                *o += v;
            }
        }
        let v = Tensor::matrix(1, c, out).expect("sum_rows shape");
        self.push(Op::SumRows(x), v)
    }

    pub fn broadcast_rows(&mut self, x: Var, rows: usize) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = t.dims();
        if r != 1 {
            return Err(Error::shape("broadcast_rows", t.shape(), &[1, c]));
        }
        let data = t.data().repeat(rows);
        let v = Tensor::matrix(rows, c, data)?;
        Ok(self.push(Op::BroadcastRows { x }, v))
    }

    /// Row sums as an `r x 1` column.
    pub fn sum_cols(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let (r, c) = t.dims();
        let out = (0..r)
            .map(|i| t.data()[i * c..(i + 1) * c].iter().sum())
            .collect();
        let v = Tensor::matrix(r, 1, out).expect("sum_cols shape");
        self.push(Op::SumCols(x), v)
    }

    pub fn broadcast_cols(&mut self, x: Var, cols: usize) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = t.dims();
        if c != 1 {
            return Err(Error::shape("broadcast_cols", t.shape(), &[r, 1]));
        }
        let mut data = Vec::with_capacity(r * cols);
        for &v in t.data() {
            data.extend(std::iter::repeat_n(v, cols));
        }
        let v = Tensor::matrix(r, cols, data)?;
        Ok(self.push(Op::BroadcastCols { x }, v))
    }

    /// Sum of all entries as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Op::Sum(x), Tensor::scalar(s))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.value(x).len().max(1) as f64;
        let s = self.sum(x);
        self.scale(s, 1.0 / n)
    }

    /// Broadcast a one-element node to `rows x cols`.
    pub fn fill(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var> {
        let t = self.value(x);
        let s = t
            .item()
            .ok_or_else(|| Error::shape("fill", t.shape(), &[1]))?;
        Ok(self.push(Op::Fill { x }, Tensor::full(&[rows, cols], s)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_dims("add", self.value(a), self.value(b))?;
        let v = self.value(a).zip(self.value(b), |x, y| x + y);
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        same_dims("sub", self.value(a), self.value(b))?;
        let v = self.value(a).zip(self.value(b), |x, y| x - y);
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        same_dims("mul", self.value(a), self.value(b))?;
        let v = self.value(a).zip(self.value(b), |x, y| x * y);
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        same_dims("div", self.value(a), self.value(b))?;
        let v = self.value(a).zip(self.value(b), |x, y| x / y);
        Ok(self.push(Op::Div(a, b), v))
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.mul(x, x).expect("square of itself")
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let v = self.value(x).map(|a| a * k);
        self.push(Op::Scale(x, k), v)
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.scale(x, -1.0)
    }

    pub fn add_scalar(&mut self, x: Var, k: f64) -> Var {
        let v = self.value(x).map(|a| a + k);
        self.push(Op::AddScalar(x), v)
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::exp);
        self.push(Op::Exp(x), v)
    }

    pub fn log(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::ln);
        self.push(Op::Log(x), v)
    }

    pub fn sqrt(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::sqrt);
        self.push(Op::Sqrt(x), v)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).map(sigmoid);
        self.push(Op::Sigmoid(x), v)
    }

    /// Elementwise `x` for `x >= 0`, `slope * x` otherwise.
    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let v = self.value(x).map(|a| if a >= 0.0 { a } else { slope * a });
        self.push(Op::LeakyRelu { x, slope }, v)
    }

    fn leaky_relu_grad(&mut self, g: Var, x: Var, slope: f64) -> Var {
        let v = self
            .value(g)
            .zip(self.value(x), |g, a| if a >= 0.0 { g } else { slope * g });
        self.push(Op::LeakyReluGrad { g, x, slope }, v)
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let v = self.value(x).map(|a| a.clamp(lo, hi));
        self.push(Op::Clamp { x, lo, hi }, v)
    }

    fn clamp_grad(&mut self, g: Var, x: Var, lo: f64, hi: f64) -> Var {
        let v = self.value(g).zip(self.value(x), |g, a| {
            if (lo..=hi).contains(&a) {
                g
            } else {
                0.0
            }
        });
        self.push(Op::ClampGrad { g, x, lo, hi }, v)
    }

    /// `[a | b]` side by side.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let ((ra, ca), (rb, cb)) = (ta.dims(), tb.dims());
        if ra != rb {
            return Err(Error::shape("concat_cols", ta.shape(), tb.shape()));
        }
        let mut data = Vec::with_capacity(ra * (ca + cb));
        for i in 0..ra {
            data.extend_from_slice(&ta.data()[i * ca..(i + 1) * ca]);
            data.extend_from_slice(&tb.data()[i * cb..(i + 1) * cb]);
        }
        let v = Tensor::matrix(ra, ca + cb, data)?;
        Ok(self.push(Op::ConcatCols(a, b), v))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = t.dims();
        if start > end || end > c {
            return Err(Error::shape("slice_cols", t.shape(), &[start, end]));
        }
        let mut data = Vec::with_capacity(r * (end - start));
        for i in 0..r {
            data.extend_from_slice(&t.data()[i * c + start..i * c + end]);
        }
        let v = Tensor::matrix(r, end - start, data)?;
        Ok(self.push(Op::SliceCols { x, start }, v))
    }

    fn pad_cols(&mut self, x: Var, start: usize, total: usize) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = t.dims();
        if start + c > total {
            return Err(Error::shape("pad_cols", t.shape(), &[start, total]));
        }
        let mut data = vec![0.0; r * total];
        for i in 0..r {
            data[i * total + start..i * total + start + c]
                .copy_from_slice(&t.data()[i * c..(i + 1) * c]);
        }
        let v = Tensor::matrix(r, total, data)?;
        Ok(self.push(Op::PadCols { x, start }, v))
    }

    /// `mu + exp(log_var / 2) * noise`, differentiable in `mu` and `log_var`.
    pub fn reparameterize(&mut self, mu: Var, log_var: Var, noise: Var) -> Result<Var> {
        let half = self.scale(log_var, 0.5);
        let sigma = self.exp(half);
        let spread = self.mul(sigma, noise)?;
        self.add(mu, spread)
    }

    /// Adjoints of a scalar `output` with respect to each of `wrt`.
    ///
    /// The adjoint computation is recorded on the graph, so the returned
    /// nodes can feed another loss and be differentiated in turn. Nodes in
    /// `wrt` that `output` does not depend on get a zero tensor.
    pub fn grad(&mut self, output: Var, wrt: &[Var]) -> Result<Vec<Var>> {
        let out_t = self.value(output);
        if out_t.len() != 1 {
            return Err(Error::NonScalarOutput(out_t.shape().to_vec()));
        }
        let n = output.0 + 1;
        let mut depends = vec![false; n];
        for w in wrt {
            if w.0 < n {
                depends[w.0] = true;
            }
        }
        for i in 0..n {
            if !depends[i] {
                depends[i] = self.nodes[i]
                    .op
                    .diff_inputs()
                    .iter()
                    .flatten()
                    .any(|j| depends[j.0]);
            }
        }

        let mut adj: Vec<Option<Var>> = vec![None; n];
        if depends[output.0] {
            let ones = Tensor::full(out_t.shape(), 1.0);
            adj[output.0] = Some(self.leaf(ones));
        }
        for i in (0..n).rev() {
            let Some(g) = adj[i] else { continue };
            let op = self.nodes[i].op;
            for (slot, input) in op.diff_inputs().into_iter().enumerate() {
                let Some(j) = input else { continue };
                if !depends[j.0] {
                    continue;
                }
                let contrib = self.vjp(Var(i), op, slot, g)?;
                adj[j.0] = Some(match adj[j.0] {
                    None => contrib,
                    Some(prev) => self.add(prev, contrib)?,
                });
            }
        }

        let mut out = Vec::with_capacity(wrt.len());
        for w in wrt {
            let shape = self.value(*w).shape().to_vec();
            let g = match adj.get(w.0).copied().flatten() {
                Some(g) if self.value(g).shape() == shape.as_slice() => g,
                Some(g) => {
                    let t = self.value(g).clone().reshape(shape)?;
                    self.leaf_like_grad(g, t)
                }
                None => self.leaf(Tensor::zeros(&shape)),
            };
            out.push(g);
        }
        Ok(out)
    }

    // Re-shape an adjoint whose matrix view matches but whose rank differs
    // (e.g. `[n]` vs `[1, n]`); routed through `Scale(1)` to stay differentiable.
    fn leaf_like_grad(&mut self, g: Var, reshaped: Tensor) -> Var {
        self.push(Op::Scale(g, 1.0), reshaped)
    }

    /// Adjoints for every leaf that `output` depends on.
    pub fn backward(&mut self, output: Var) -> Result<Gradients> {
        let n = output.0 + 1;
        let leaves: Vec<Var> = (0..n)
            .filter(|&i| matches!(self.nodes[i].op, Op::Leaf))
            .map(Var)
            .collect();
        let grads = self.grad(output, &leaves)?;
        let mut pairs = Vec::new();
        // keep only leaves actually reached
        let mut reached = vec![false; n];
        reached[output.0] = true;
        for i in (0..n).rev() {
            if reached[i] {
                for j in self.nodes[i].op.diff_inputs().into_iter().flatten() {
                    reached[j.0] = true;
                }
            }
        }
        for (leaf, g) in leaves.into_iter().zip(grads) {
            if reached[leaf.0] {
                pairs.push((leaf, g));
            }
        }
        Ok(Gradients { pairs })
    }

    /// Vector-Jacobian product of node `out` for input `slot`, given adjoint `g`.
    fn vjp(&mut self, out: Var, op: Op, slot: usize, g: Var) -> Result<Var> {
        use Op::*;
        Ok(match (op, slot) {
            (MatMul { b, ta, tb, .. }, 0) => {
                if ta {
                    self.matmul_t(b, g, tb, true)?
                } else {
                    self.matmul_t(g, b, false, !tb)?
                }
            }
            (MatMul { a, ta, tb, .. }, 1) => {
                if tb {
                    self.matmul_t(g, a, true, ta)?
                } else {
                    self.matmul_t(a, g, !ta, false)?
                }
            }
            (AddRow { .. }, 0) => g,
            (AddRow { .. }, 1) => self.sum_rows(g),
            (SumRows(x), 0) => {
                let r = self.value(x).rows();
                self.broadcast_rows(g, r)?
            }
            (BroadcastRows { .. }, 0) => self.sum_rows(g),
            (SumCols(x), 0) => {
                let c = self.value(x).cols();
                self.broadcast_cols(g, c)?
            }
            (BroadcastCols { .. }, 0) => self.sum_cols(g),
            (Sum(x), 0) => {
                let (r, c) = self.value(x).dims();
                self.fill(g, r, c)?
            }
            (Fill { .. }, 0) => self.sum(g),
            (Add(..), _) => g,
            (Sub(..), 0) => g,
            (Sub(..), 1) => self.neg(g),
            (Mul(_, b), 0) => self.mul(g, b)?,
            (Mul(a, _), 1) => self.mul(g, a)?,
            (Div(_, b), 0) => self.div(g, b)?,
            (Div(_, b), 1) => {
                // d(a/b)/db = -(a/b)/b
                let q = self.div(out, b)?;
                let t = self.mul(g, q)?;
                self.neg(t)
            }
            (Scale(_, k), 0) => self.scale(g, k),
            (AddScalar(_), 0) => g,
            (Exp(_), 0) => self.mul(g, out)?,
            (Log(x), 0) => self.div(g, x)?,
            (Sqrt(_), 0) => {
                let twice = self.scale(out, 2.0);
                self.div(g, twice)?
            }
            (Sigmoid(_), 0) => {
                let neg = self.neg(out);
                let one_minus = self.add_scalar(neg, 1.0);
                let d = self.mul(out, one_minus)?;
                self.mul(g, d)?
            }
            (LeakyRelu { x, slope }, 0) => self.leaky_relu_grad(g, x, slope),
            (LeakyReluGrad { x, slope, .. }, 0) => self.leaky_relu_grad(g, x, slope),
            (Clamp { x, lo, hi }, 0) => self.clamp_grad(g, x, lo, hi),
            (ClampGrad { x, lo, hi, .. }, 0) => self.clamp_grad(g, x, lo, hi),
            (ConcatCols(a, _), 0) => {
                let ca = self.value(a).cols();
                self.slice_cols(g, 0, ca)?
            }
            (ConcatCols(a, b), 1) => {
                let ca = self.value(a).cols();
                let cb = self.value(b).cols();
                self.slice_cols(g, ca, ca + cb)?
            }
            (SliceCols { x, start, .. }, 0) => {
                let total = self.value(x).cols();
                self.pad_cols(g, start, total)?
            }
            (PadCols { x, start, .. }, 0) => {
                let c = self.value(x).cols();
                self.slice_cols(g, start, start + c)?
            }
            (op, slot) => unreachable!("no input {slot} for {op:?}"),
        })
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
