//! Deep nonlinear autoencoders versus the truncated-SVD linear autoencoder.
//!
//! For any `g` mapping rows of `X` to `k` features and any `k × n` output
//! map `W_L`, the product `g(X)·W_L` has rank at most `k`, so its squared
//! error is bounded below by the discarded singular values of `X`. The linear
//! autoencoder `X·V_k·V_kᵀ` attains that bound. This module trains small deep
//! models by gradient descent and records the gap to the linear optimum.

mod deep_ae;
mod linear;
mod verify;

pub use deep_ae::{
    deep_ae_forward, finite_difference_gradient, loss_and_gradient, max_relative_error, squared_error, train_deep_ae,
    Activation, ArchSpec, DeepAEParams, Layer, TrainSettings,
};
pub use linear::{linear_ae_optimum, LinearOptimum};
pub use verify::{
    default_archs, full_arch_grid, trial_seed, verify_proposition, Generator, PropositionReport, TrialRecord,
    VerifyConfig,
};
