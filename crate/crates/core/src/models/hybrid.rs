use serde::{Deserialize, Serialize};

use super::quantum::{QlifCell, QlstmCell};
use super::{check_features, Head, Model, ModelKind, STEPS};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;
use crate::nn::{Bound, LinearLayer, ParamId, ParamStore, SpikeMode};
use crate::rng::SplitMix64;

/// Which output the forward pass produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HybridStage {
    /// The QSNN head's per-step outputs, scored by summed counts.
    Qsnn,
    /// The spike train through the QLSTM branch into two sigmoid outputs.
    Joint,
}

/// Training progress; phases must run in order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HybridPhase {
    Fresh,
    QsnnPretrained,
    QlstmTrained,
    CoTrained,
}

/// QSNN front end (`30 → 10` into a QLIF layer) whose 25-step spike train is
/// read by a QLSTM (hidden 10, one entangler layer per gate). The QSNN's own
/// `10 → 2` head is kept for pre-training only.
pub struct Hybrid {
    store: ParamStore,
    pub front: LinearLayer,
    pub qlif: QlifCell,
    pub head: LinearLayer,
    pub pre: LinearLayer,
    pub cell: QlstmCell,
    pub out: LinearLayer,
    pub steps: usize,
    pub mode: SpikeMode,
    pub stage: HybridStage,
    pub(crate) phase: HybridPhase,
}

impl Hybrid {
    pub const HIDDEN: usize = 10;

    pub fn new(seed: u64) -> Self {
        let mut rng = SplitMix64::derive(seed, &format!("init:{}", ModelKind::QsnnQlstm.id()));
        let mut store = ParamStore::new();
        let front = LinearLayer::new(&mut store, "qsnn.front", 30, 10, &mut rng);
        let qlif = QlifCell::new(&mut store, "qsnn.qlif1", 10, &mut rng);
        let head = LinearLayer::new(&mut store, "qsnn.head", 10, 2, &mut rng);
        let pre = LinearLayer::new(&mut store, "qlstm.pre", 10, 20, &mut rng);
        let cell = QlstmCell::new(&mut store, "qlstm.cell", 20, Self::HIDDEN, 1, &mut rng);
        let out = LinearLayer::new(&mut store, "qlstm.final", Self::HIDDEN, 2, &mut rng);
        Self {
            store,
            front,
            qlif,
            head,
            pre,
            cell,
            out,
            steps: STEPS,
            mode: SpikeMode::Heaviside,
            stage: HybridStage::Joint,
            phase: HybridPhase::Fresh,
        }
    }

    pub fn phase(&self) -> HybridPhase {
        self.phase
    }

    /// Front linear layer, QLIF circuit, and the pre-training head.
    pub fn qsnn_params(&self) -> Vec<ParamId> {
        self.store.with_prefix("qsnn.")
    }

    /// The QSNN parameters that feed the QLSTM branch (the head excluded).
    pub fn qsnn_joint_params(&self) -> Vec<ParamId> {
        let mut v = self.store.with_prefix("qsnn.front");
        v.extend(self.store.with_prefix("qsnn.qlif1"));
        v
    }

    pub fn qlstm_params(&self) -> Vec<ParamId> {
        self.store.with_prefix("qlstm.")
    }

    /// QLIF spike train `s₁ … s_T`, each `[batch, 10]`.
    pub fn spike_train(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Vec<Var>> {
        check_features(tape, x)?;
        let current = self.front.forward(tape, p, x)?;
        let mut state = None;
        let mut spikes = Vec::with_capacity(self.steps);
        for _ in 0..self.steps {
            let (u, s) = self.qlif.step(tape, p, state, current, self.mode)?;
            state = Some((u, s));
            spikes.push(s);
        }
        Ok(spikes)
    }
}

impl Model for Hybrid {
    fn kind(&self) -> ModelKind {
        ModelKind::QsnnQlstm
    }

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn set_spike_mode(&mut self, mode: SpikeMode) {
        self.mode = mode;
    }

    fn as_hybrid_mut(&mut self) -> Option<&mut Hybrid> {
        Some(self)
    }

    fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Head> {
        let spikes = self.spike_train(tape, p, x)?;
        match self.stage {
            HybridStage::Qsnn => {
                let record = spikes
                    .iter()
                    .map(|&s| self.head.forward(tape, p, s))
                    .collect::<Result<_>>()?;
                Ok(Head::SpikeRecord(record))
            }
            HybridStage::Joint => {
                let b = tape.value(spikes[0]).dims2()?.0;
                let mut h = tape.constant(Tensor::zeros(&[b, Self::HIDDEN]));
                let mut c = h;
                for &s in &spikes {
                    let xv = self.pre.forward(tape, p, s)?;
                    (h, c) = self.cell.step(tape, p, xv, h, c)?;
                }
                let logits = self.out.forward(tape, p, h)?;
                Ok(Head::TwoSigmoid(tape.sigmoid(logits)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::GradCheckOptions;
    use crate::models::model_grad_check;

    fn rows(b: usize, seed: u64) -> Tensor {
        let mut r = SplitMix64::new(seed);
        let mut d: Vec<f64> = (0..b * 30).map(|_| r.normal()).collect();
        for row in d.chunks_mut(30) {
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter_mut().for_each(|v| *v /= n);
        }
        Tensor::matrix(b, 30, d).unwrap()
    }

    #[test]
    fn groups_partition_the_parameters() {
        let m = Hybrid::new(0);
        let count = |ids: &[ParamId]| ids.iter().map(|&i| m.store.get(i).len()).sum::<usize>();
        assert_eq!(count(&m.qsnn_params()), 310 + 15 + 22);
        assert_eq!(count(&m.qlstm_params()), 220 + 105 + 20 + 60 + 22);
        assert_eq!(count(&m.qsnn_joint_params()), 325);
    }

    #[test]
    fn silent_spikes_and_zero_branch_give_one_half() {
        let mut m = Hybrid::new(1);
        let ids: Vec<ParamId> = m.qlstm_params();
        for id in ids {
            m.store.get_mut(id).data_mut().fill(0.0);
        }
        // A large negative bias keeps every membrane below threshold.
        m.store.get_mut(m.front.b).data_mut().fill(-50.0);
        let mut t = Tape::new();
        let p = m.store.bind_frozen(&mut t);
        let x = t.constant(rows(2, 2));
        let spikes = m.spike_train(&mut t, &p, x).unwrap();
        assert!(spikes
            .iter()
            .all(|&s| t.value(s).data().iter().all(|&v| v == 0.0)));
        let h = m.forward(&mut t, &p, x).unwrap();
        let Head::TwoSigmoid(o) = h else { panic!() };
        assert_eq!(t.value(o).data(), &[0.5; 4]);
    }

    #[test]
    fn end_to_end_gradients_through_the_full_unroll() {
        let mut m = Hybrid::new(2);
        m.set_spike_mode(SpikeMode::Smooth);
        let r = model_grad_check(
            &m,
            &rows(2, 3),
            &[1, 0],
            &GradCheckOptions::new(1e-4).sample(25, 4),
        )
        .unwrap();
        assert!(r.passed, "{}", r.max_rel_error);
    }
}
