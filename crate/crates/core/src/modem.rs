//! Gray-coded 16-QAM with hard decisions and bit error accounting.
//!
//! Wire contract: each symbol carries bits `b0 b1 b2 b3`; `b0 b1` select the
//! in-phase level and `b2 b3` the quadrature level through the Gray table
//! `00 → −3, 01 → −1, 11 → +1, 10 → +3`, and the grid is scaled by `1/√10`
//! for unit average energy. Decisions at a boundary go to the more negative
//! level.

use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

pub const BITS_PER_SYMBOL: usize = 4;

/// Amplitude scale giving the 16-point grid unit average energy.
pub fn qam16_scale() -> f64 {
    1.0 / 10f64.sqrt()
}

/// A bit sequence whose length is a whole number of 16-QAM symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBlock(Vec<u8>);

impl BitBlock {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if !bits.len().is_multiple_of(BITS_PER_SYMBOL) {
            return Err(Error::InvalidArgument(format!(
                "{} bits is not a multiple of {BITS_PER_SYMBOL}",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("bits must be 0 or 1".into()));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// I.i.d. uniform bits.
pub fn gen_random_bits<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<BitBlock> {
    if !count.is_multiple_of(BITS_PER_SYMBOL) {
        return Err(Error::InvalidArgument(format!(
            "bit count {count} is not a multiple of {BITS_PER_SYMBOL}"
        )));
    }
    let mut bits = Vec::with_capacity(count);
    while bits.len() < count {
        let word: u64 = rng.random();
        let take = (count - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    Ok(BitBlock(bits))
}

fn gray_level(hi: u8, lo: u8) -> f64 {
    match (hi, lo) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

/// Hard decision on one axis, returning the Gray pair for the nearest level.
fn decide_level(v: f64) -> (u8, u8) {
    let v = v / qam16_scale();
    if v <= -2.0 {
        (0, 0)
    } else if v <= 0.0 {
        (0, 1)
    } else if v <= 2.0 {
        (1, 1)
    } else {
        (1, 0)
    }
}

/// The 16 constellation points with their 4-bit labels (`b0` most significant).
#[derive(Debug, Clone)]
pub struct QamConstellation {
    points: Vec<(u8, Complex64)>,
}

impl QamConstellation {
    pub fn gray16() -> Self {
        let points = (0u8..16)
            .map(|label| {
                let b = |k: u8| (label >> (3 - k)) & 1;
                let s = Complex64::new(gray_level(b(0), b(1)), gray_level(b(2), b(3))) * qam16_scale();
                (label, s)
            })
            .collect();
        Self { points }
    }

    pub fn points(&self) -> &[(u8, Complex64)] {
        &self.points
    }
}

pub fn map_16qam(bits: &BitBlock) -> Vec<Complex64> {
    let scale = qam16_scale();
    bits.0
        .chunks_exact(BITS_PER_SYMBOL)
        .map(|b| Complex64::new(gray_level(b[0], b[1]), gray_level(b[2], b[3])) * scale)
        .collect()
}

pub fn demap_16qam(symbols: &[Complex64]) -> BitBlock {
    let mut bits = Vec::with_capacity(symbols.len() * BITS_PER_SYMBOL);
    for s in symbols {
        let (b0, b1) = decide_level(s.re);
        let (b2, b3) = decide_level(s.im);
        bits.extend([b0, b1, b2, b3]);
    }
    BitBlock(bits)
}

/// Hamming distance between two bit blocks and its ratio to their length.
pub fn count_bit_errors(tx: &BitBlock, rx: &BitBlock) -> Result<(u64, f64)> {
    if tx.len() != rx.len() {
        return Err(Error::Dimension(format!(
            "comparing {} bits with {} bits",
            tx.len(),
            rx.len()
        )));
    }
    let errors = tx.0.iter().zip(&rx.0).filter(|(a, b)| a != b).count() as u64;
    let ber = if tx.is_empty() {
        0.0
    } else {
        errors as f64 / tx.len() as f64
    };
    Ok((errors, ber))
}

/// Common approximation of Gray 16-QAM BER over AWGN:
/// `(3/8)·erfc(√(Es/(10·N0)))`.
pub fn qam16_ber_approx(es_n0_db: f64) -> f64 {
    let es_n0 = 10f64.powf(es_n0_db / 10.0);
    0.375 * libm::erfc((es_n0 / 10.0).sqrt())
}
