//! Minimal dense-network engine with manual backpropagation.
//!
//! Only what the autoencoder needs: affine layers, batch normalization, ReLU,
//! a complex-valued MSE, Adam and the Keras-style learning-rate plateau and
//! early-stopping callbacks. Everything runs in `f64` so finite-difference
//! checks are meaningful.

mod adam;
mod batch;
mod batchnorm;
mod callbacks;
mod dense;
pub mod gradcheck;
mod loss;
mod relu;

pub use adam::{AdamConfig, AdamState};
pub use batch::RealBatch;
pub use batchnorm::{BatchNormCache, BatchNormLayer, Mode};
pub use callbacks::{CallbackAction, CallbackConfig, TrainerCallbacks};
pub use dense::{DenseGrads, DenseLayer};
pub use loss::mse_loss;
pub use relu::{relu_backward, relu_forward};
