use serde::{Deserialize, Serialize};

use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const RMSPROP_DECAY: f64 = 0.99;
pub const OPTIM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    Rmsprop,
}

/// First-order optimizer over a fixed subset of a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    params: Vec<ParamId>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: Vec<ParamId>, store: &ParamStore) -> Self {
        let zeros = |on: bool| -> Vec<Vec<f64>> {
            params
                .iter()
                .map(|&id| {
                    if on {
                        vec![0.0; store.get(id).len()]
                    } else {
                        Vec::new()
                    }
                })
                .collect()
        };
        Self {
            kind,
            lr,
            m: zeros(kind == OptimizerKind::Adam),
            v: zeros(kind != OptimizerKind::Sgd),
            params,
            t: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn params(&self) -> &[ParamId] {
        &self.params
    }

    /// Updates every owned parameter. `grads` is indexed by [`ParamId`].
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Option<Vec<f64>>]) -> Result<()> {
        for &id in &self.params {
            match grads.get(id.index()) {
                Some(Some(g)) if g.len() == store.get(id).len() => {}
                _ => {
                    return Err(Error::Contract(format!(
                        "no gradient for parameter {}",
                        store.name(id)
                    )))
                }
            }
        }
        self.t += 1;
        let lr = self.lr;
        let (bc1, bc2) = (1.0 - ADAM_BETA1.powi(self.t), 1.0 - ADAM_BETA2.powi(self.t));
        for (k, &id) in self.params.iter().enumerate() {
            let g = grads[id.index()].as_ref().expect("checked above");
            let w = store.get_mut(id).data_mut();
            match self.kind {
                OptimizerKind::Sgd => {
                    for (w, g) in w.iter_mut().zip(g) {
                        *w -= lr * g;
                    }
                }
                OptimizerKind::Adam => {
                    let (m, v) = (&mut self.m[k], &mut self.v[k]);
                    for j in 0..w.len() {
                        m[j] = ADAM_BETA1 * m[j] + (1.0 - ADAM_BETA1) * g[j];
                        v[j] = ADAM_BETA2 * v[j] + (1.0 - ADAM_BETA2) * g[j] * g[j];
                        let mh = m[j] / bc1;
                        let vh = v[j] / bc2;
                        w[j] -= lr * mh / (vh.sqrt() + OPTIM_EPS);
                    }
                }
                OptimizerKind::Rmsprop => {
                    let v = &mut self.v[k];
                    for j in 0..w.len() {
                        v[j] = RMSPROP_DECAY * v[j] + (1.0 - RMSPROP_DECAY) * g[j] * g[j];
                        w[j] -= lr * g[j] / (v[j].sqrt() + OPTIM_EPS);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reduces the learning rate when validation loss stops improving.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauScheduler {
    pub patience: usize,
    pub factor: f64,
    pub min_delta: f64,
    best: f64,
    wait: usize,
}

impl PlateauScheduler {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            factor: 0.1,
            min_delta: 1e-8,
            best: f64::INFINITY,
            wait: 0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn wait(&self) -> usize {
        self.wait
    }

    /// Records one epoch's validation loss; returns true if the rates were cut.
    pub fn step(&mut self, val_loss: f64, optimizers: &mut [&mut Optimizer]) -> bool {
        if val_loss < self.best - self.min_delta {
            self.best = val_loss;
            self.wait = 0;
            return false;
        }
        self.wait += 1;
        if self.wait > self.patience {
            for o in optimizers.iter_mut() {
                o.set_lr(o.lr() * self.factor);
            }
            self.wait = 0;
            return true;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn one(w: f64) -> (ParamStore, ParamId) {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::vector(vec![w]));
        (s, id)
    }

    #[test]
    fn sgd_step() {
        let (mut s, id) = one(1.0);
        let mut o = Optimizer::new(OptimizerKind::Sgd, 0.1, vec![id], &s);
        o.step(&mut s, &[Some(vec![2.0])]).unwrap();
        assert!((s.get(id).item() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        for g in [1e-3, -0.5, 7.0, -300.0] {
            let (mut s, id) = one(0.3);
            let mut o = Optimizer::new(OptimizerKind::Adam, 1e-3, vec![id], &s);
            o.step(&mut s, &[Some(vec![g])]).unwrap();
            let dw = s.get(id).item() - 0.3;
            assert!((dw.abs() - 1e-3).abs() < 1e-6);
            assert_eq!(dw.signum(), -g.signum());
        }
    }

    #[test]
    fn rmsprop_first_step() {
        let (mut s, id) = one(0.0);
        let mut o = Optimizer::new(OptimizerKind::Rmsprop, 0.01, vec![id], &s);
        o.step(&mut s, &[Some(vec![3.0])]).unwrap();
        assert!((s.get(id).item() + 0.1).abs() < 1e-4);
    }

    #[test]
    fn missing_gradient_is_a_contract_error() {
        let (mut s, id) = one(0.0);
        let mut o = Optimizer::new(OptimizerKind::Sgd, 0.1, vec![id], &s);
        assert!(matches!(o.step(&mut s, &[None]), Err(Error::Contract(_))));
        assert!(matches!(o.step(&mut s, &[]), Err(Error::Contract(_))));
    }

    #[test]
    fn optimizer_touches_only_its_subset() {
        let mut s = ParamStore::new();
        let a = s.add("a", Tensor::vector(vec![1.0]));
        let b = s.add("b", Tensor::vector(vec![1.0]));
        let mut o = Optimizer::new(OptimizerKind::Adam, 0.1, vec![b], &s);
        o.step(&mut s, &[None, Some(vec![1.0])]).unwrap();
        assert_eq!(s.get(a).item(), 1.0);
        assert!(s.get(b).item() < 1.0);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let (mut s, id) = one(0.5);
            let mut o = Optimizer::new(OptimizerKind::Adam, 0.01, vec![id], &s);
            for k in 0..50 {
                let w = s.get(id).item();
                o.step(&mut s, &[Some(vec![(w * k as f64).sin()])]).unwrap();
            }
            s.get(id).item().to_bits()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn plateau_traces() {
        let (s, id) = one(0.0);
        let mut o = Optimizer::new(OptimizerKind::Adam, 1e-3, vec![id], &s);
        let mut sch = PlateauScheduler::new(2);
        for epoch in 1..=4 {
            let cut = sch.step(0.7, &mut [&mut o]);
            assert_eq!(cut, epoch == 4);
        }
        assert!((o.lr() - 1e-4).abs() < 1e-18);

        let mut o = Optimizer::new(OptimizerKind::Sgd, 1.0, vec![id], &s);
        let mut sch = PlateauScheduler::new(2);
        for k in 0..20 {
            sch.step(1.0 - k as f64 * 0.01, &mut [&mut o]);
        }
        assert_eq!(o.lr(), 1.0);

        let mut sch = PlateauScheduler::new(2);
        let mut best = 10.0;
        for k in 0..30 {
            let loss = if k % 2 == 0 {
                best -= 0.1;
                best
            } else {
                best + 1.0
            };
            sch.step(loss, &mut [&mut o]);
            assert!(sch.wait() <= 2);
        }
        assert_eq!(o.lr(), 1.0);
    }
}
