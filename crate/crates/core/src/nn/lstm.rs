//! LSTM cell: `v = [x, h]`, `f, i, o = σ(W·v + b)`, `c̃ = tanh(W·v + b)`,
//! `c = f⊙c_prev + i⊙c̃`, `h = o⊙tanh(c)`. Gate blocks are ordered f, i, c̃, o.

use super::params::{Bound, ParamId, ParamStore};
use crate::autodiff::{sigmoid, tanh, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Plain per-gate weights over the concatenation `[x, h]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCellWeights {
    /// `[f, i, c̃, o]`, each `[hidden, input + hidden]`.
    pub w: [Tensor; 4],
    /// `[f, i, c̃, o]`, each of length `hidden`.
    pub b: [Vec<f64>; 4],
}

impl LstmCellWeights {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Tensor::zeros(&[hidden, input + hidden])),
            b: std::array::from_fn(|_| vec![0.0; hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b[0].len()
    }
}

/// Reference single step on plain vectors.
pub fn lstm_cell_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w: &LstmCellWeights,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let hid = w.hidden();
    let cols = x.len() + hid;
    if h_prev.len() != hid || c_prev.len() != hid {
        return Err(Error::dim(format!(
            "hidden size {hid}, got h of {} and c of {}",
            h_prev.len(),
            c_prev.len()
        )));
    }
    for (g, m) in w.w.iter().enumerate() {
        if m.shape() != [hid, cols] || w.b[g].len() != hid {
            return Err(Error::dim(format!(
                "gate {g} weights {:?} do not fit input {} + hidden {hid}",
                m.shape(),
                x.len()
            )));
        }
    }
    let v: Vec<f64> = x.iter().chain(h_prev).copied().collect();
    let pre = |g: usize, r: usize| -> f64 {
        w.w[g]
            .row(r)
            .iter()
            .zip(&v)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + w.b[g][r]
    };
    let mut h = vec![0.0; hid];
    let mut c = vec![0.0; hid];
    for r in 0..hid {
        let f = sigmoid(pre(0, r));
        let i = sigmoid(pre(1, r));
        let g = tanh(pre(2, r));
        let o = sigmoid(pre(3, r));
        c[r] = f * c_prev[r] + i * g;
        h[r] = o * tanh(c[r]);
    }
    Ok((h, c))
}

/// Combines gate pre-activations `[f, i, c̃, o]` with `c_prev` into `(h, c)`.
pub fn lstm_update(tape: &mut Tape, pre: [Var; 4], c_prev: Var) -> Result<(Var, Var)> {
    let f = tape.sigmoid(pre[0]);
    let i = tape.sigmoid(pre[1]);
    let g = tape.tanh(pre[2]);
    let o = tape.sigmoid(pre[3]);
    let keep = tape.mul(f, c_prev)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok((h, c))
}

// `w` is `[weight_ih, weight_hh, bias_ih, bias_hh]`.
fn step_vars(
    tape: &mut Tape,
    w: [Var; 4],
    x: Var,
    h: Var,
    c: Var,
    hidden: usize,
) -> Result<(Var, Var)> {
    let wih = tape.transpose(w[0])?;
    let whh = tape.transpose(w[1])?;
    let a = tape.matmul(x, wih)?;
    let a = tape.add(a, w[2])?;
    let r = tape.matmul(h, whh)?;
    let r = tape.add(r, w[3])?;
    let gates = tape.add(a, r)?;
    let mut pre = [gates; 4];
    for (g, slot) in pre.iter_mut().enumerate() {
        *slot = tape.slice(gates, g * hidden..(g + 1) * hidden, 1)?;
    }
    lstm_update(tape, pre, c)
}

/// One recurrent layer with separate input and hidden biases, the layout
/// that yields `4·h·(in + h) + 8·h` parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmLayer {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b_ih: ParamId,
    pub b_hh: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl LstmLayer {
    /// Registers the four tensors, drawn from `U(-1/√hidden, 1/√hidden)`.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut SplitMix64,
    ) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        let mut draw = |shape: &[usize]| {
            let n = shape.iter().product();
            Tensor::new(shape.to_vec(), (0..n).map(|_| rng.uniform(-k, k)).collect())
                .expect("sized")
        };
        let w_ih = draw(&[4 * hidden, input]);
        let w_hh = draw(&[4 * hidden, hidden]);
        let b_ih = draw(&[4 * hidden]);
        let b_hh = draw(&[4 * hidden]);
        Self {
            w_ih: store.add(format!("{name}.weight_ih"), w_ih),
            w_hh: store.add(format!("{name}.weight_hh"), w_hh),
            b_ih: store.add(format!("{name}.bias_ih"), b_ih),
            b_hh: store.add(format!("{name}.bias_hh"), b_hh),
            input,
            hidden,
        }
    }

    pub fn param_count(&self) -> usize {
        4 * self.hidden * (self.input + self.hidden) + 8 * self.hidden
    }

    /// One step over a batch: `x: [B, input]`, `h, c: [B, hidden]`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        p: &Bound,
        x: Var,
        h: Var,
        c: Var,
    ) -> Result<(Var, Var)> {
        let w = [self.w_ih, self.w_hh, self.b_ih, self.b_hh].map(|id| p.var(id));
        step_vars(tape, w, x, h, c, self.hidden)
    }

    /// The equivalent per-gate weights over `[x, h]`, with biases summed.
    pub fn cell_weights(&self, store: &ParamStore) -> LstmCellWeights {
        let (hid, inp) = (self.hidden, self.input);
        let (wih, whh) = (store.get(self.w_ih), store.get(self.w_hh));
        let (bih, bhh) = (store.get(self.b_ih).data(), store.get(self.b_hh).data());
        let w = std::array::from_fn(|g| {
            let mut d = Vec::with_capacity(hid * (inp + hid));
            for r in g * hid..(g + 1) * hid {
                d.extend_from_slice(wih.row(r));
                d.extend_from_slice(whh.row(r));
            }
            Tensor::matrix(hid, inp + hid, d).expect("sized")
        });
        let b =
            std::array::from_fn(|g| (g * hid..(g + 1) * hid).map(|r| bih[r] + bhh[r]).collect());
        LstmCellWeights { w, b }
    }
}
