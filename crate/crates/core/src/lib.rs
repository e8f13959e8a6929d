//! Unsupervised delamination detection from guided-wave signals.
//!
//! Guided-wave records are turned into wavelet scalogram images and scored
//! by learners fitted on baseline (undamaged) data only:
//!
//! * [`subspace`] + [`ocsvm`]: PCA or FastICA features feeding a one-class SVM.
//! * [`cae`]: a convolutional autoencoder whose reconstruction error is
//!   thresholded.
//!
//! [`detect`] ties the stages together and produces confusion-matrix
//! reports; [`wavegen`] supplies synthetic datasets.

mod codec;
pub mod cae;
pub mod config;
pub mod detect;
pub mod error;
pub mod ocsvm;
pub mod seed;
pub mod subspace;
pub mod scalogram;
pub mod wavegen;

pub use error::{Error, FormatError, Result};
