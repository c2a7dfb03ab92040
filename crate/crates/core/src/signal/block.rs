use num_complex::Complex64;

use crate::nn::RealBatch;
use crate::{Error, Result};

/// One OFDM block of `N` complex baseband samples, `N` a power of two ≥ 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBlock(Vec<Complex64>);

impl ComplexBlock {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        let n = samples.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::NonFinite("complex block sample".into()));
        }
        Ok(Self(samples))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn samples(&self) -> &[Complex64] {
        &self.0
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.0
    }

    pub fn energy(&self) -> f64 {
        self.0.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.len() as f64
    }
}

/// Packs a block as `[Re(s_0..s_{N−1}) | Im(s_0..s_{N−1})]`.
///
/// Unlike the other constructors in this module this accepts any length, so
/// single samples can be packed too.
pub fn c2r(samples: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * samples.len());
    out.extend(samples.iter().map(|s| s.re));
    out.extend(samples.iter().map(|s| s.im));
    out
}

/// Inverse of [`c2r`].
pub fn r2c(row: &[f64]) -> Result<Vec<Complex64>> {
    if !row.len().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "real row of odd length {} cannot hold complex pairs",
            row.len()
        )));
    }
    let (re, im) = row.split_at(row.len() / 2);
    Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

/// Packs blocks row by row into a `B × 2N` batch.
pub fn blocks_to_batch(blocks: &[ComplexBlock]) -> Result<RealBatch> {
    let n = blocks
        .first()
        .map(ComplexBlock::len)
        .ok_or_else(|| Error::Dimension("empty block batch".into()))?;
    if let Some(b) = blocks.iter().find(|b| b.len() != n) {
        return Err(Error::Dimension(format!(
            "blocks of length {n} and {} in one batch",
            b.len()
        )));
    }
    let mut data = Vec::with_capacity(blocks.len() * 2 * n);
    for b in blocks {
        data.extend(c2r(b.samples()));
    }
    RealBatch::new(blocks.len(), 2 * n, data)
}

/// Unpacks a `B × 2N` batch into `B` blocks.
pub fn batch_to_blocks(batch: &RealBatch) -> Result<Vec<ComplexBlock>> {
    (0..batch.rows())
        .map(|r| ComplexBlock::new(r2c(batch.row(r))?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn packing_examples() {
        assert_eq!(c2r(&[c(1.0, 2.0)]), vec![1.0, 2.0]);
        assert_eq!(c2r(&[c(1.0, 0.0), c(0.0, 1.0)]), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(r2c(&[0.0, 0.0]).unwrap(), vec![c(0.0, 0.0)]);
        assert_eq!(r2c(&[3.0, 4.0]).unwrap(), vec![c(3.0, 4.0)]);
        assert!(matches!(r2c(&[1.0, 2.0, 3.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn block_length_rules() {
        assert!(matches!(ComplexBlock::zeros(3), Err(Error::NotPowerOfTwo(3))));
        assert!(ComplexBlock::zeros(1).is_err());
        assert!(ComplexBlock::zeros(8).is_ok());
        assert!(ComplexBlock::new(vec![c(f64::NAN, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn batch_packing_rejects_mixed_lengths() {
        let a = ComplexBlock::zeros(2).unwrap();
        let b = ComplexBlock::zeros(4).unwrap();
        assert!(blocks_to_batch(&[a, b]).is_err());
        assert!(blocks_to_batch(&[]).is_err());
    }

    proptest! {
        #[test]
        fn c2r_r2c_are_exact_inverses(v in proptest::collection::vec(-1e6f64..1e6, 0..64)) {
            let even = &v[..v.len() / 2 * 2];
            let back = c2r(&r2c(even).unwrap());
            prop_assert_eq!(back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                            even.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            let samples = r2c(even).unwrap();
            prop_assert_eq!(r2c(&c2r(&samples)).unwrap(), samples);
        }
    }
}
