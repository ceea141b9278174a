//! Variational relevance vector machine (VRVM) for sparse kernel
//! regression and binary classification.
//!
//! The model places a Gaussian prior with per-weight precision
//! hyperparameters over the kernel weights and Gamma hyperpriors over
//! those precisions (plus the noise precision in regression). All
//! variational factors have closed-form coordinate-ascent updates, and the
//! evidence lower bound is exactly evaluable, which doubles as a training
//! monitor and a correctness oracle: no update may ever decrease it.
//!
//! Entry points:
//! - [`regression::fit`] / [`classification::fit`] train on raw inputs;
//! - [`regression::predict`] returns a full predictive mean/variance pair;
//! - [`classification::predict_proba`] returns moderated class probabilities;
//! - [`data`] has synthetic generators, CSV ingestion, and k-fold
//!   cross-validation for kernel-width selection;
//! - [`model_io`] persists trained models losslessly as readable text.

pub mod classification;
pub mod data;
pub mod error;
pub mod fit;
pub mod kernel;
pub mod model_io;
pub mod regression;
pub mod special;

pub use error::{Error, Result};
pub use fit::{FitConfig, FitReport, HyperpriorConfig};
pub use kernel::{DesignMatrix, GaussianConvention, KernelKind, KernelSpec, Standardizer};
