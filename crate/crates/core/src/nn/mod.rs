//! Classical building blocks: layers, spiking neurons, recurrent cells,
//! optimizers and losses.

mod lif;
mod linear;
mod loss;
mod lstm;
mod optim;
mod params;

pub use lif::{
    beta_from_tau, lif_step, lif_step_tape, smooth_spike, surrogate_grad, surrogate_spike,
    LifConfig, LifState, SpikeMode,
};
pub use linear::LinearLayer;
pub use loss::{class1_softmax, class_argmax, spike_count_ce};
pub use lstm::{lstm_cell_step, lstm_update, LstmCellWeights, LstmLayer};
pub use optim::{
    Optimizer, OptimizerKind, PlateauScheduler, ADAM_BETA1, ADAM_BETA2, OPTIM_EPS, RMSPROP_DECAY,
};
pub use params::{Bound, ParamId, ParamStore};
