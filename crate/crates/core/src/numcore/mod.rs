//! Dense numeric substrate shared by every model: row-major matrices, a
//! seeded counter-based generator, trainable tensors, optimizers, dropout and
//! a finite-difference gradient checker. Everything is 64-bit.

mod dropout;
mod gradcheck;
mod matrix;
mod optim;
mod param;
mod rng;

pub use dropout::{dropout, dropout_mask};
pub use gradcheck::{grad_check, GradCheckOptions};
pub use matrix::{axpy, dot, norm2, Matrix};
pub use optim::{
    clip_global_norm, sgd_hinge_step, AdamConfig, AdamState, LinearWeights,
};
pub use param::{init_params, ParamTensor, Parametrized};
pub use rng::Rng;
