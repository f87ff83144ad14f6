use std::ops::Range;

use super::tensor::{matmul_nn, matmul_nt, matmul_tn, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Backward rule for an operation defined outside this module.
///
/// Returns one entry per input: the gradient with respect to that input
/// (same length as the input's data), or `None` when the input does not
/// receive one.
pub trait BackwardRule: Send + Sync {
    fn backward(&self, inputs: &[&Tensor], output: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduce {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Broadcast {
    Same,
    /// `b` is a vector repeated over every row of `a`.
    Row,
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Binary(BinaryOp, Var, Var, Broadcast),
    Scale(Var, f64),
    Offset(Var),
    Act(Activation, Var),
    Concat {
        parts: Vec<Var>,
        axis: usize,
    },
    Slice {
        x: Var,
        axis: usize,
        range: Range<usize>,
    },
    Reduce {
        kind: Reduce,
        x: Var,
        axis: Option<usize>,
    },
    Bce {
        p: Var,
        target: Vec<f64>,
    },
    CrossEntropy {
        logits: Var,
        classes: Vec<usize>,
        softmax: Vec<f64>,
    },
    Custom {
        inputs: Vec<Var>,
        rule: Box<dyn BackwardRule>,
    },
}

struct Node {
    value: Tensor,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
    op: Op,
}

/// Probabilities are clamped to `[BCE_EPS, 1 - BCE_EPS]` inside [`Tape::bce_loss`].
pub const BCE_EPS: f64 = 1e-7;

/// Largest double strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

pub fn tanh(x: f64) -> f64 {
    x.tanh().clamp(-BELOW_ONE, BELOW_ONE)
}

/// Reverse-mode tape.
///
/// Every operation appends a node holding its value and the inputs needed by
/// its backward rule, so node order is a topological order. [`Tape::backward`]
/// walks it once in reverse and *adds* the result into each node's gradient;
/// call [`Tape::zero_grad`] between independent passes.
pub struct Tape {
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            requires_grad,
            grad: None,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records a trainable input.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Records a value that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    pub fn leaf(&mut self, t: Tensor, requires_grad: bool) -> Var {
        self.push(t, Op::Leaf, requires_grad)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    /// Accumulated gradient, if a backward pass reached `v`.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2()?;
        let (k2, n) = self.value(b).dims2()?;
        if k != k2 {
            return Err(Error::dim(format!(
                "matmul of {:?} by {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let out = matmul_nn(self.value(a).data(), self.value(b).data(), m, k, n);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), rg))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.value(a).dims2()?;
        let src = self.value(a).data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        let rg = self.rg(a);
        Ok(self.push(Tensor::new(vec![c, r], out)?, Op::Transpose(a), rg))
    }

    fn broadcast_kind(&self, a: Var, b: Var) -> Result<Broadcast> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        if sa == sb {
            Ok(Broadcast::Same)
        } else if sb.len() == 1 && sa.last() == Some(&sb[0]) {
            Ok(Broadcast::Row)
        } else {
            Err(Error::dim(format!("elementwise op on {sa:?} and {sb:?}")))
        }
    }

    pub fn elementwise(&mut self, op: BinaryOp, a: Var, b: Var) -> Result<Var> {
        let bc = self.broadcast_kind(a, b)?;
        let av = self.value(a);
        let bv = self.value(b).data();
        let f = match op {
            BinaryOp::Add => |x: f64, y: f64| x + y,
            BinaryOp::Sub => |x: f64, y: f64| x - y,
            BinaryOp::Mul => |x: f64, y: f64| x * y,
        };
        let out: Vec<f64> = match bc {
            Broadcast::Same => av.data().iter().zip(bv).map(|(&x, &y)| f(x, y)).collect(),
            Broadcast::Row => {
                let n = bv.len();
                av.data()
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| f(x, bv[i % n]))
                    .collect()
            }
        };
        let t = Tensor::new(av.shape().to_vec(), out)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(t, Op::Binary(op, a, b, bc), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(BinaryOp::Mul, a, b)
    }

    /// `c · a`.
    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a);
        let t = Tensor::new(v.shape().to_vec(), v.data().iter().map(|x| c * x).collect())
            .expect("same shape");
        let rg = self.rg(a);
        self.push(t, Op::Scale(a, c), rg)
    }

    /// `a + c` for a constant `c`.
    pub fn offset(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a);
        let t = Tensor::new(v.shape().to_vec(), v.data().iter().map(|x| x + c).collect())
            .expect("same shape");
        let rg = self.rg(a);
        self.push(t, Op::Offset(a), rg)
    }

    pub fn activation(&mut self, kind: Activation, x: Var) -> Var {
        let v = self.value(x);
        let f = match kind {
            Activation::Sigmoid => sigmoid,
            Activation::Tanh => tanh,
            Activation::Relu => |x: f64| x.max(0.0),
        };
        let t = Tensor::new(v.shape().to_vec(), v.data().iter().map(|&x| f(x)).collect())
            .expect("same shape");
        let rg = self.rg(x);
        self.push(t, Op::Act(kind, x), rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.activation(Activation::Sigmoid, x)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.activation(Activation::Tanh, x)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.activation(Activation::Relu, x)
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::dim("concat of zero tensors"))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(Error::Bounds(format!("axis {axis} of {base:?}")));
        }
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(Error::dim(format!(
                    "concat of {base:?} with {s:?} on axis {axis}"
                )));
            }
            total += s[axis];
        }
        let (outer, _, inner) = split_axis(&base, axis);
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &p in parts {
                let v = self.value(p);
                let w = v.shape()[axis] * inner;
                out.extend_from_slice(&v.data()[o * w..(o + 1) * w]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(
            Tensor::new(shape, out)?,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            rg,
        ))
    }

    pub fn slice(&mut self, x: Var, range: Range<usize>, axis: usize) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        if axis >= shape.len() {
            return Err(Error::Bounds(format!("axis {axis} of {shape:?}")));
        }
        if range.start > range.end || range.end > shape[axis] {
            return Err(Error::Bounds(format!(
                "slice {range:?} of axis {axis} with extent {}",
                shape[axis]
            )));
        }
        let (outer, len, inner) = split_axis(&shape, axis);
        let src = self.value(x).data();
        let w = range.len() * inner;
        let mut out = Vec::with_capacity(outer * w);
        for o in 0..outer {
            let base = o * len * inner + range.start * inner;
            out.extend_from_slice(&src[base..base + w]);
        }
        let mut oshape = shape;
        oshape[axis] = range.len();
        let rg = self.rg(x);
        Ok(self.push(Tensor::new(oshape, out)?, Op::Slice { x, axis, range }, rg))
    }

    /// Sum or mean over one axis (removing it) or over everything (`None`, scalar result).
    pub fn reduce(&mut self, kind: Reduce, x: Var, axis: Option<usize>) -> Result<Var> {
        let v = self.value(x);
        let t = match axis {
            None => {
                let s: f64 = v.data().iter().sum();
                let n = v.len().max(1) as f64;
                Tensor::scalar(if kind == Reduce::Mean { s / n } else { s })
            }
            Some(ax) => {
                if ax >= v.ndim() {
                    return Err(Error::Bounds(format!("axis {ax} of {:?}", v.shape())));
                }
                let (outer, len, inner) = split_axis(v.shape(), ax);
                let mut out = vec![0.0; outer * inner];
                for o in 0..outer {
                    for l in 0..len {
                        let src = &v.data()[(o * len + l) * inner..(o * len + l + 1) * inner];
                        for (d, s) in out[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                            *d += s;
                        }
                    }
                }
                if kind == Reduce::Mean && len > 0 {
                    out.iter_mut().for_each(|d| *d /= len as f64);
                }
                let mut shape = v.shape().to_vec();
                shape.remove(ax);
                Tensor::new(shape, out)?
            }
        };
        let rg = self.rg(x);
        Ok(self.push(t, Op::Reduce { kind, x, axis }, rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        self.reduce(Reduce::Sum, x, None).expect("full reduction")
    }

    pub fn mean(&mut self, x: Var) -> Var {
        self.reduce(Reduce::Mean, x, None).expect("full reduction")
    }

    /// Mean binary cross-entropy of probabilities `p` against 0/1 targets.
    pub fn bce_loss(&mut self, p: Var, target: &Tensor) -> Result<Var> {
        let pv = self.value(p);
        if pv.shape() != target.shape() {
            return Err(Error::dim(format!(
                "bce of {:?} against targets {:?}",
                pv.shape(),
                target.shape()
            )));
        }
        let n = pv.len().max(1) as f64;
        let loss: f64 = pv
            .data()
            .iter()
            .zip(target.data())
            .map(|(&p, &y)| {
                let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / n;
        let rg = self.rg(p);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Bce {
                p,
                target: target.data().to_vec(),
            },
            rg,
        ))
    }

    /// Mean of `-ln softmax(logits)[class]` over the rows of `logits`.
    pub fn cross_entropy(&mut self, logits: Var, classes: &[usize]) -> Result<Var> {
        let (rows, c) = self.value(logits).dims2()?;
        if c < 2 {
            return Err(Error::dim(format!(
                "cross-entropy needs at least 2 classes, got {c}"
            )));
        }
        if rows != classes.len() {
            return Err(Error::dim(format!(
                "{rows} logit rows for {} labels",
                classes.len()
            )));
        }
        let lv = self.value(logits).data();
        let mut softmax = vec![0.0; rows * c];
        let mut loss = 0.0;
        for (r, &y) in classes.iter().enumerate() {
            if y >= c {
                return Err(Error::Bounds(format!("class {y} with {c} logits")));
            }
            let row = &lv[r * c..(r + 1) * c];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - mx).exp()).sum();
            for k in 0..c {
                softmax[r * c + k] = (row[k] - mx).exp() / z;
            }
            loss += z.ln() - (row[y] - mx);
        }
        let rg = self.rg(logits);
        Ok(self.push(
            Tensor::scalar(loss / rows.max(1) as f64),
            Op::CrossEntropy {
                logits,
                classes: classes.to_vec(),
                softmax,
            },
            rg,
        ))
    }

    /// Records an operation whose forward value was computed by the caller.
    pub fn custom(&mut self, inputs: &[Var], value: Tensor, rule: Box<dyn BackwardRule>) -> Var {
        let rg = inputs.iter().any(|&v| self.rg(v));
        self.push(
            value,
            Op::Custom {
                inputs: inputs.to_vec(),
                rule,
            },
            rg,
        )
    }

    /// Adds `∂loss/∂v` into the gradient of every node that requires one.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward from a non-scalar of shape {:?}",
                self.shape(loss)
            )));
        }
        let mut pending: Vec<Option<Vec<f64>>> = Vec::new();
        pending.resize_with(loss.0 + 1, || None);
        pending[loss.0] = Some(vec![1.0]);

        for id in (0..=loss.0).rev() {
            let Some(g) = pending[id].take() else {
                continue;
            };
            if !self.nodes[id].requires_grad {
                continue;
            }
            for (input, contribution) in self.input_grads(id, &g) {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                match &mut pending[input.0] {
                    Some(acc) => acc.iter_mut().zip(&contribution).for_each(|(a, c)| *a += c),
                    slot @ None => *slot = Some(contribution),
                }
            }
            let node = &mut self.nodes[id];
            match &mut node.grad {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, c)| *a += c),
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn input_grads(&self, id: usize, g: &[f64]) -> Vec<(Var, Vec<f64>)> {
        let node = &self.nodes[id];
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => vec![],
            Op::MatMul(a, b) => {
                let (m, k) = val(*a).dims2().unwrap();
                let n = val(*b).shape()[1];
                let mut out = Vec::with_capacity(2);
                if self.rg(*a) {
                    out.push((*a, matmul_nt(g, val(*b).data(), m, n, k)));
                }
                if self.rg(*b) {
                    out.push((*b, matmul_tn(val(*a).data(), g, m, k, n)));
                }
                out
            }
            Op::Transpose(a) => {
                let (r, c) = val(*a).dims2().unwrap();
                let mut d = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        d[i * c + j] = g[j * r + i];
                    }
                }
                vec![(*a, d)]
            }
            Op::Binary(op, a, b, bc) => {
                let av = val(*a).data();
                let bv = val(*b).data();
                let nb = bv.len();
                let bidx = |i: usize| match bc {
                    Broadcast::Same => i,
                    Broadcast::Row => i % nb,
                };
                let da: Vec<f64> = match op {
                    BinaryOp::Add | BinaryOp::Sub => g.to_vec(),
                    BinaryOp::Mul => g
                        .iter()
                        .enumerate()
                        .map(|(i, gi)| gi * bv[bidx(i)])
                        .collect(),
                };
                let mut db = vec![0.0; nb];
                for (i, gi) in g.iter().enumerate() {
                    db[bidx(i)] += match op {
                        BinaryOp::Add => *gi,
                        BinaryOp::Sub => -gi,
                        BinaryOp::Mul => gi * av[i],
                    };
                }
                vec![(*a, da), (*b, db)]
            }
            Op::Scale(a, c) => vec![(*a, g.iter().map(|x| c * x).collect())],
            Op::Offset(a) => vec![(*a, g.to_vec())],
            Op::Act(kind, x) => {
                let y = node.value.data();
                let xv = val(*x).data();
                let d = g
                    .iter()
                    .enumerate()
                    .map(|(i, gi)| {
                        gi * match kind {
                            Activation::Sigmoid => y[i] * (1.0 - y[i]),
                            Activation::Tanh => 1.0 - y[i] * y[i],
                            Activation::Relu => (xv[i] > 0.0) as u8 as f64,
                        }
                    })
                    .collect();
                vec![(*x, d)]
            }
            Op::Concat { parts, axis } => {
                let (outer, total, inner) = split_axis(node.value.shape(), *axis);
                let mut grads: Vec<Vec<f64>> = parts
                    .iter()
                    .map(|p| Vec::with_capacity(val(*p).len()))
                    .collect();
                for o in 0..outer {
                    let mut off = o * total * inner;
                    for (k, p) in parts.iter().enumerate() {
                        let w = val(*p).shape()[*axis] * inner;
                        grads[k].extend_from_slice(&g[off..off + w]);
                        off += w;
                    }
                }
                parts.iter().copied().zip(grads).collect()
            }
            Op::Slice { x, axis, range } => {
                let shape = val(*x).shape();
                let (outer, len, inner) = split_axis(shape, *axis);
                let w = range.len() * inner;
                let mut d = vec![0.0; val(*x).len()];
                for o in 0..outer {
                    let base = o * len * inner + range.start * inner;
                    d[base..base + w].copy_from_slice(&g[o * w..(o + 1) * w]);
                }
                vec![(*x, d)]
            }
            Op::Reduce { kind, x, axis } => {
                let xv = val(*x);
                let d = match axis {
                    None => {
                        let s = if *kind == Reduce::Mean {
                            g[0] / xv.len().max(1) as f64
                        } else {
                            g[0]
                        };
                        vec![s; xv.len()]
                    }
                    Some(ax) => {
                        let (outer, len, inner) = split_axis(xv.shape(), *ax);
                        let scale = if *kind == Reduce::Mean {
                            1.0 / len as f64
                        } else {
                            1.0
                        };
                        let mut d = vec![0.0; xv.len()];
                        for o in 0..outer {
                            for l in 0..len {
                                for i in 0..inner {
                                    d[(o * len + l) * inner + i] = g[o * inner + i] * scale;
                                }
                            }
                        }
                        d
                    }
                };
                vec![(*x, d)]
            }
            Op::Bce { p, target } => {
                let pv = val(*p).data();
                let n = pv.len().max(1) as f64;
                let d = pv
                    .iter()
                    .zip(target)
                    .map(|(&p, &y)| {
                        let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
                        g[0] * (p - y) / (p * (1.0 - p)) / n
                    })
                    .collect();
                vec![(*p, d)]
            }
            Op::CrossEntropy {
                logits,
                classes,
                softmax,
            } => {
                let c = val(*logits).shape()[1];
                let n = classes.len().max(1) as f64;
                let mut d: Vec<f64> = softmax.iter().map(|s| g[0] * s / n).collect();
                for (r, &y) in classes.iter().enumerate() {
                    d[r * c + y] -= g[0] / n;
                }
                vec![(*logits, d)]
            }
            Op::Custom { inputs, rule } => {
                let ins: Vec<&Tensor> = inputs.iter().map(|v| val(*v)).collect();
                let grads = rule.backward(&ins, &node.value, g);
                inputs
                    .iter()
                    .copied()
                    .zip(grads)
                    .filter_map(|(v, d)| d.map(|d| (v, d)))
                    .collect()
            }
        }
    }
}
