//! Dense f64 numerics with hand-written backward passes.

mod gradcheck;
mod lstm;
mod matrix;
pub mod ops;
mod params;

pub use gradcheck::{
    finite_difference, grad_check, relative_error, GradCheckConfig, GradCheckReport, TensorCheck,
};
pub use lstm::{recurrent_cell, recurrent_cell_backward, CellCache, LstmGrads, LstmWeights};
pub use matrix::{axpy, dot, Matrix};
pub use ops::{
    affine, affine_backward, cross_entropy, cross_entropy_backward, one_hot, softmax,
    softmax_backward, LOG_EPSILON,
};
pub use params::{ParamId, ParamKind, ParameterStore};
