//! The seven fraud-detection architectures and their training procedures.

mod classical;
mod hybrid;
mod quantum;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::{grad_check_many, GradCheckOptions, GradCheckReport, Tape, Tensor, Var};
use crate::data::{Preprocessing, Regime, N_FEATURES};
use crate::error::{Error, Result};
use crate::nn::{class1_softmax, spike_count_ce, Bound, OptimizerKind, ParamStore, SpikeMode};

pub use classical::{Ann, LstmModel, Snn};
pub use hybrid::{Hybrid, HybridPhase, HybridStage};
pub use quantum::{QlifCell, Qlstm, QlstmCell, Qnn, Qsnn, N_QUBITS};
pub use train::{
    evaluate, hybrid_phase_one, hybrid_phase_three, hybrid_phase_two, predict, prepare_data,
    train_hybrid_three_phase, train_model, Curves, PhaseReport, PreparedData,
};

/// Default number of simulation steps for the spiking models.
pub const STEPS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "ann")]
    Ann,
    #[serde(rename = "snn")]
    Snn,
    #[serde(rename = "lstm")]
    Lstm,
    #[serde(rename = "qnn")]
    Qnn,
    #[serde(rename = "qsnn")]
    Qsnn,
    #[serde(rename = "qlstm")]
    Qlstm,
    #[serde(rename = "qsnn-qlstm")]
    QsnnQlstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Ann,
        ModelKind::Snn,
        ModelKind::Lstm,
        ModelKind::Qnn,
        ModelKind::Qsnn,
        ModelKind::Qlstm,
        ModelKind::QsnnQlstm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Ann => "ann",
            ModelKind::Snn => "snn",
            ModelKind::Lstm => "lstm",
            ModelKind::Qnn => "qnn",
            ModelKind::Qsnn => "qsnn",
            ModelKind::Qlstm => "qlstm",
            ModelKind::QsnnQlstm => "qsnn-qlstm",
        }
    }

    /// Reference trainable-parameter count of each architecture.
    pub fn expected_param_count(self) -> usize {
        match self {
            ModelKind::Ann => 731,
            ModelKind::Snn => 3302,
            ModelKind::Lstm => 43457,
            ModelKind::Qnn => 108,
            ModelKind::Qsnn => 362,
            ModelKind::Qlstm => 6521,
            ModelKind::QsnnQlstm => 774,
        }
    }

    /// Breakdown of [`Self::expected_param_count`] by layer.
    pub fn param_arithmetic(self) -> &'static str {
        match self {
            ModelKind::Ann => "30·20+20 + 20·5+5 + 5·1+1",
            ModelKind::Snn => "30·100+100 + 100·2+2",
            ModelKind::Lstm => "4·50·30+4·50·50+8·50 + 4·50·50+4·50·50+8·50 + 50·128+128 + 128·1+1",
            ModelKind::Qnn => "5·3·5 + 32·1+1",
            ModelKind::Qsnn => "30·10+10 + 3·5 + 10·2+2 + 3·5",
            ModelKind::Qlstm => "30·155+155 + 155·5+5 + 4·3·5·1 + 5·125+125 + 125·1+1",
            ModelKind::QsnnQlstm => {
                "30·10+10 + 3·5 + 10·2+2 + 10·20+20 + 20·5+5 + 4·1·5 + 5·10+10 + 10·2+2"
            }
        }
    }

    pub fn regime(self) -> Regime {
        match self {
            ModelKind::Ann | ModelKind::Snn | ModelKind::Lstm => Regime::Classical,
            _ => Regime::Quantum,
        }
    }

    pub fn is_spiking(self) -> bool {
        matches!(
            self,
            ModelKind::Snn | ModelKind::Qsnn | ModelKind::QsnnQlstm
        )
    }

    /// Hyperparameters of the benchmark protocol.
    pub fn train_config(self) -> TrainConfig {
        let opt = |kind, lr| OptimSpec { kind, lr };
        let base = |optimizer, batch_size, epochs, preprocessing| TrainConfig {
            optimizer,
            qlstm_optimizer: None,
            batch_size,
            epochs,
            plateau_patience: None,
            steps: None,
            phase_epochs: None,
            preprocessing,
            regime: self.regime(),
        };
        use OptimizerKind::*;
        use Preprocessing::*;
        match self {
            ModelKind::Ann => base(opt(Sgd, 1e-2), 128, 700, Standard),
            ModelKind::Lstm => TrainConfig {
                plateau_patience: Some(30),
                ..base(opt(Adam, 1e-3), 128, 350, Standard)
            },
            ModelKind::Snn => TrainConfig {
                steps: Some(STEPS),
                ..base(opt(Adam, 1e-3), 64, 350, Standard)
            },
            ModelKind::Qnn => base(opt(Rmsprop, 1e-2), 256, 70, StandardL2),
            ModelKind::Qlstm => TrainConfig {
                plateau_patience: Some(20),
                ..base(opt(Adam, 1e-2), 256, 100, MinMaxHalfPi)
            },
            ModelKind::Qsnn => TrainConfig {
                steps: Some(STEPS),
                ..base(opt(Sgd, 1e-3), 64, 80, StandardL2)
            },
            ModelKind::QsnnQlstm => TrainConfig {
                qlstm_optimizer: Some(opt(Rmsprop, 1e-2)),
                steps: Some(STEPS),
                phase_epochs: Some([20, 20]),
                ..base(opt(Adam, 1e-2), 128, 40, StandardL2)
            },
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown model id {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimSpec {
    pub kind: OptimizerKind,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimSpec,
    /// Second optimizer of the hybrid, applied to its QLSTM branch.
    pub qlstm_optimizer: Option<OptimSpec>,
    pub batch_size: usize,
    /// Total epochs; for the hybrid, phase I plus phase III.
    pub epochs: usize,
    pub plateau_patience: Option<usize>,
    pub steps: Option<usize>,
    /// Hybrid only: epochs of phase I and phase III.
    pub phase_epochs: Option<[usize; 2]>,
    pub preprocessing: Preprocessing,
    pub regime: Regime,
}

impl TrainConfig {
    /// Overrides the epoch budget; the hybrid gives phase I the larger half.
    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        if self.phase_epochs.is_some() {
            let first = epochs.div_ceil(2);
            self.phase_epochs = Some([first, epochs - first]);
        }
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if let Some([a, b]) = self.phase_epochs {
            if a + b != self.epochs {
                return Err(Error::Config(format!(
                    "phase epochs {a} + {b} do not add up to {}",
                    self.epochs
                )));
            }
        }
        Ok(())
    }
}

/// Output of a model's forward pass.
pub enum Head {
    /// `[batch, 1]` probabilities of the positive class.
    Probability(Var),
    /// Per-step `[batch, 2]` outputs whose sum over steps is read as class scores.
    SpikeRecord(Vec<Var>),
    /// `[batch, 2]` independent sigmoid outputs; column 1 scores the positive class.
    TwoSigmoid(Var),
}

impl Head {
    /// Binary cross-entropy for probability heads, cross-entropy on summed
    /// counts for spike records.
    pub fn loss(&self, tape: &mut Tape, labels: &[u8]) -> Result<Var> {
        match self {
            Head::Probability(p) => {
                let t = Tensor::matrix(
                    labels.len(),
                    1,
                    labels.iter().map(|&y| f64::from(y)).collect(),
                )?;
                tape.bce_loss(*p, &t)
            }
            Head::SpikeRecord(r) => {
                let y: Vec<usize> = labels.iter().map(|&y| usize::from(y)).collect();
                Ok(spike_count_ce(tape, r, &y)?.0)
            }
            Head::TwoSigmoid(p) => {
                let onehot = labels
                    .iter()
                    .flat_map(|&y| if y == 1 { [0.0, 1.0] } else { [1.0, 0.0] })
                    .collect();
                tape.bce_loss(*p, &Tensor::matrix(labels.len(), 2, onehot)?)
            }
        }
    }

    /// Positive-class score per sample.
    pub fn scores(&self, tape: &Tape) -> Vec<f64> {
        match self {
            Head::Probability(p) => tape.value(*p).data().to_vec(),
            Head::SpikeRecord(r) => {
                let mut counts = tape.value(r[0]).data().to_vec();
                for &s in &r[1..] {
                    counts
                        .iter_mut()
                        .zip(tape.value(s).data())
                        .for_each(|(c, v)| *c += v);
                }
                class1_softmax(&counts)
            }
            Head::TwoSigmoid(p) => tape
                .value(*p)
                .data()
                .chunks_exact(2)
                .map(|r| r[1])
                .collect(),
        }
    }
}

pub trait Model: Send + Sync {
    fn kind(&self) -> ModelKind;
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
    fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Head>;

    /// Forward behaviour of spike nonlinearities; a no-op for non-spiking models.
    fn set_spike_mode(&mut self, _mode: SpikeMode) {}

    fn as_hybrid_mut(&mut self) -> Option<&mut Hybrid> {
        None
    }

    fn param_count(&self) -> usize {
        self.params().count()
    }

    /// Model id followed by every parameter name and shape.
    fn descriptor(&self) -> String {
        let mut s = self.kind().id().to_string();
        for (name, t) in self.params().iter() {
            s.push_str(&format!(";{name}{:?}", t.shape()));
        }
        s
    }
}

/// Fresh model with parameters drawn from streams derived from `seed`.
pub fn build_model(kind: ModelKind, seed: u64) -> Box<dyn Model> {
    match kind {
        ModelKind::Ann => Box::new(Ann::new(seed)),
        ModelKind::Snn => Box::new(Snn::new(seed)),
        ModelKind::Lstm => Box::new(LstmModel::new(seed)),
        ModelKind::Qnn => Box::new(Qnn::new(seed)),
        ModelKind::Qsnn => Box::new(Qsnn::new(seed)),
        ModelKind::Qlstm => Box::new(Qlstm::new(seed)),
        ModelKind::QsnnQlstm => Box::new(Hybrid::new(seed)),
    }
}

/// Finite-difference check of the training loss of `model` on `(x, labels)`
/// with respect to every parameter tensor.
pub fn model_grad_check(
    model: &dyn Model,
    x: &Tensor,
    labels: &[u8],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let inputs: Vec<Tensor> = model.params().iter().map(|(_, t)| t.clone()).collect();
    grad_check_many(
        |tape, vars| {
            let p = Bound::from_vars(vars.to_vec());
            let xv = tape.constant(x.clone());
            let head = model.forward(tape, &p, xv)?;
            head.loss(tape, labels)
        },
        &inputs,
        opts,
    )
}

pub(crate) fn check_features(tape: &Tape, x: Var) -> Result<usize> {
    let (b, k) = tape.value(x).dims2()?;
    if k != N_FEATURES {
        return Err(Error::dim(format!(
            "{k} input features, expected {N_FEATURES}"
        )));
    }
    Ok(b)
}
