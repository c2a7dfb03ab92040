//! End-to-end learning simulator for coherent-optical OFDM links impaired by
//! laser phase noise.
//!
//! A dense autoencoder is trained through a differentiable random-walk
//! phase-noise channel and then evaluated inside an IFFT/FFT OFDM pipeline
//! with OSNR-calibrated AWGN. The crate is organised bottom-up:
//!
//! - [`nn`]: dense layers, batch normalization, ReLU, MSE, Adam and the
//!   plateau / early-stopping callbacks, all with hand-written backward passes.
//! - [`signal`]: complex blocks, real/complex packing, the unitary FFT and
//!   power normalization.
//! - [`channel`]: Wiener phase noise, OSNR calibration, the channel forward
//!   map and its adjoint.
//! - [`modem`]: Gray-coded 16-QAM and bit error accounting.
//! - [`autoencoder`]: the encoder/decoder stacks, training and checkpoints.
//! - [`experiments`]: BER sweeps, required OSNR and plot tables.

// `!(x > 0.0)` is how argument checks here reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoencoder;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod modem;
pub mod nn;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
