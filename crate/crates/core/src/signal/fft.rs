use std::f64::consts::PI;

use num_complex::Complex64;

use super::ComplexBlock;
use crate::{Error, Result};

/// Radix-2 decimation-in-time FFT with cached twiddles, scaled by `1/√N` in
/// both directions so the transform pair is unitary.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    twiddles: Vec<Complex64>,
    bit_reverse: Vec<usize>,
    scale: f64,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        let bits = n.trailing_zeros();
        let bit_reverse = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        Ok(Self {
            n,
            twiddles,
            bit_reverse,
            scale: 1.0 / (n as f64).sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) -> Result<()> {
        self.transform(data, false)
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) -> Result<()> {
        self.transform(data, true)
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) -> Result<()> {
        let n = self.n;
        if data.len() != n {
            return Err(Error::Dimension(format!(
                "FFT plan for {n} points applied to {} samples",
                data.len()
            )));
        }
        for i in 0..n {
            let j = self.bit_reverse[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let w = if inverse { w.conj() } else { w };
                    let t = w * data[start + k + half];
                    let u = data[start + k];
                    data[start + k] = u + t;
                    data[start + k + half] = u - t;
                }
            }
            len <<= 1;
        }
        for v in data.iter_mut() {
            *v *= self.scale;
        }
        Ok(())
    }
}

pub fn fft_unitary(block: &ComplexBlock) -> Result<ComplexBlock> {
    let plan = FftPlan::new(block.len())?;
    let mut out = block.clone();
    plan.forward_in_place(out.samples_mut())?;
    Ok(out)
}

pub fn ifft_unitary(block: &ComplexBlock) -> Result<ComplexBlock> {
    let plan = FftPlan::new(block.len())?;
    let mut out = block.clone();
    plan.inverse_in_place(out.samples_mut())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn block(v: &[f64]) -> ComplexBlock {
        ComplexBlock::new(v.iter().map(|&x| c(x, 0.0)).collect()).unwrap()
    }

    fn random_block(n: usize, seed: u64) -> ComplexBlock {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ComplexBlock::new(
            (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    /// O(N²) unitary DFT used as the independent oracle.
    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, &v)| {
                        v * Complex64::from_polar(1.0, -2.0 * PI * ((k * t) % n) as f64 / n as f64)
                    })
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dc_and_impulse() {
        let dc = fft_unitary(&block(&[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(max_abs_diff(dc.samples(), block(&[2.0, 0.0, 0.0, 0.0]).samples()) < 1e-15);
        let imp = fft_unitary(&block(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(max_abs_diff(imp.samples(), block(&[0.5; 4]).samples()) < 1e-15);
    }

    #[test]
    fn matches_naive_dft() {
        for n in [2, 8, 64, 256] {
            let x = random_block(n, n as u64);
            let fast = fft_unitary(&x).unwrap();
            assert!(
                max_abs_diff(fast.samples(), &naive_dft(x.samples())) < 1e-12,
                "n={n}"
            );
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for n in [4, 64, 1024] {
            let x = random_block(n, 99 + n as u64);
            let f = fft_unitary(&x).unwrap();
            let back = ifft_unitary(&f).unwrap();
            assert!(max_abs_diff(back.samples(), x.samples()) < 1e-12, "n={n}");
            assert!(
                (f.energy() - x.energy()).abs() < 1e-12 * x.energy().max(1.0),
                "n={n}"
            );
        }
    }

    #[test]
    fn linearity_and_shift_theorem() {
        let n = 64;
        let x = random_block(n, 1);
        let y = random_block(n, 2);
        let (a, b) = (c(0.3, -1.1), c(2.0, 0.5));
        let combo = ComplexBlock::new(
            x.samples()
                .iter()
                .zip(y.samples())
                .map(|(p, q)| a * p + b * q)
                .collect(),
        )
        .unwrap();
        let lhs = fft_unitary(&combo).unwrap();
        let (fx, fy) = (fft_unitary(&x).unwrap(), fft_unitary(&y).unwrap());
        let rhs: Vec<_> = fx
            .samples()
            .iter()
            .zip(fy.samples())
            .map(|(p, q)| a * p + b * q)
            .collect();
        assert!(max_abs_diff(lhs.samples(), &rhs) < 1e-10);

        // circular shift by s multiplies bin k by exp(-2πi k s / N)
        let s = 5;
        let shifted = ComplexBlock::new((0..n).map(|t| x.samples()[(t + n - s) % n]).collect()).unwrap();
        let fs = fft_unitary(&shifted).unwrap();
        let expected: Vec<_> = fx
            .samples()
            .iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * s) as f64 / n as f64))
            .collect();
        assert!(max_abs_diff(fs.samples(), &expected) < 1e-10);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(FftPlan::new(12), Err(Error::NotPowerOfTwo(12))));
        let plan = FftPlan::new(4).unwrap();
        let mut v = vec![c(0.0, 0.0); 8];
        assert!(plan.forward_in_place(&mut v).is_err());
    }
}
