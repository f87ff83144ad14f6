use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use crate::models::TrainConfig;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Class counts of the three splits of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train_fraud: usize,
    pub train_nonfraud: usize,
    pub validation_fraud: usize,
    pub validation_nonfraud: usize,
    pub test_fraud: usize,
    pub test_nonfraud: usize,
}

/// Outcome of one seeded training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub model: String,
    pub seed: u64,
    pub param_count: usize,
    pub config: TrainConfig,
    pub split: SplitSizes,
    /// Entries in the loss curves, one per pass over the training split.
    pub epochs: usize,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Training phase of each curve entry: `train` for single-phase models,
    /// `I`, `II`, `III` for the three-phase hybrid.
    pub phase: Vec<String>,
    pub metrics: Metrics,
    pub wall_clock_secs: f64,
}

impl RunRecord {
    /// The record with timing removed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_secs: 0.0,
            ..self.clone()
        }
    }
}
