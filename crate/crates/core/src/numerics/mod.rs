//! Dense kernels with analytic gradients.

mod dropout;
mod gradcheck;
mod linear;
mod lstm;
mod optim;
mod softmax;
mod tensor;

pub use dropout::{dropout, Mode};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, DENOMINATOR_FLOOR};
pub use linear::{linear_forward, Linear};
pub use lstm::{
    blstm_backward, blstm_forward, lstm_backward, lstm_cell, lstm_forward, sigmoid, Blstm, BlstmCache, LstmCache,
    LstmParams, LstmState, FORGET_BIAS_INIT,
};
pub use optim::{clip_gradients, global_norm, AdamConfig, AdamState};
pub use softmax::{argmax, log_sum_exp, softmax, softmax_xent};
pub use tensor::{axpy, dot, Parameters, Tensor2};
