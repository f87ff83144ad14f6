//! Hybrid quantum-classical models for credit-card fraud detection.
//!
//! Seven architectures (ANN, SNN, LSTM, QNN, QSNN, QLSTM and the QSNN-QLSTM
//! composite) built on a tape-based autodiff engine and an exact statevector
//! simulator, plus the data pipeline and benchmark harness that runs them
//! under a seeded multi-run protocol.

// Negated comparisons such as `!(x > 0.0)` are used on purpose so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod bench;
pub mod data;
pub mod error;
pub mod models;
pub mod nn;
pub mod qsim;
pub mod rng;

pub use error::{Error, Result};
