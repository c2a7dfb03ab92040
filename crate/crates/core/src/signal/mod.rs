//! Complex baseband utilities: blocks, real/complex packing, the unitary
//! FFT and power normalization.

mod block;
mod fft;
mod power;

pub use block::{batch_to_blocks, blocks_to_batch, c2r, r2c, ComplexBlock};
pub use fft::{fft_unitary, ifft_unitary, FftPlan};
pub use power::{normalize_power, NormalizationMode, PowerNormCache, PowerNormalizer};

pub use num_complex::Complex64;
