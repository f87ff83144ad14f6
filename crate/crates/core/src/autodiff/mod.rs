//! Reverse-mode automatic differentiation over dense `f64` tensors.

mod check;
mod tape;
mod tensor;

pub use check::{
    grad_check, grad_check_many, GradCheckOptions, GradCheckReport, InputReport, DEFAULT_STEP,
};
pub use tape::{sigmoid, tanh, Activation, BackwardRule, BinaryOp, Reduce, Tape, Var, BCE_EPS};
pub use tensor::Tensor;
