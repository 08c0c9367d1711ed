//! Closed-form training of low-rank emphasized denoising linear autoencoders
//! (EDLAE) for collaborative filtering, with unconstrained ridge baselines,
//! strong-generalization ranking evaluation, and an empirical check that deep
//! nonlinear autoencoders never fit training data better than a linear
//! autoencoder of equal bottleneck width.
//!
//! The typical pipeline is
//!
//! ```no_run
//! use edlae::dataset::{gram, load_interactions, InputFormat};
//! use edlae::edlae::{train_closed_form, EdlaeConfig};
//!
//! let (x, _ids) = load_interactions("ratings.csv", InputFormat::Csv, true).unwrap();
//! let g = gram(&x);
//! let model = train_closed_form(&g, &EdlaeConfig::new(10.0, 0.25, 64)).unwrap();
//! # let _ = model;
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dataset;
pub mod diagnostics;
pub mod edlae;
pub mod error;
pub mod evaluation;
pub mod matrixops;
pub mod model_io;
pub mod par;
pub mod proposition;
pub mod synthetic;
pub mod tuning;

pub use error::{Error, Result};
