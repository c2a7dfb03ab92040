use serde::{Deserialize, Serialize};

use super::ComplexBlock;
use crate::nn::RealBatch;
use crate::{Error, Result};

/// Scope over which mean power is forced to one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// One common factor for the whole batch.
    #[default]
    Batch,
    /// One factor per block.
    Block,
}

/// Unit-power scaling of real-pair rows, with its backward pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct PowerNormalizer {
    pub mode: NormalizationMode,
}

#[derive(Debug, Clone)]
pub struct PowerNormCache {
    input: RealBatch,
    /// Scale applied to each row.
    scales: Vec<f64>,
}

impl PowerNormCache {
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

impl PowerNormalizer {
    pub fn new(mode: NormalizationMode) -> Self {
        Self { mode }
    }

    #[allow(clippy::single_range_in_vec_init)]
    fn groups(&self, rows: usize) -> Vec<std::ops::Range<usize>> {
        match self.mode {
            NormalizationMode::Batch => vec![0..rows],
            NormalizationMode::Block => (0..rows).map(|r| r..r + 1).collect(),
        }
    }

    pub fn forward(&self, z: &RealBatch) -> Result<(RealBatch, PowerNormCache)> {
        if !z.cols().is_multiple_of(2) {
            return Err(Error::Dimension(
                "power normalization needs real/imag pairs".into(),
            ));
        }
        let complex_per_row = (z.cols() / 2) as f64;
        let mut out = z.clone();
        let mut scales = vec![0.0; z.rows()];
        for g in self.groups(z.rows()) {
            let energy: f64 = g.clone().flat_map(|r| z.row(r)).map(|v| v * v).sum();
            let power = energy / (complex_per_row * g.len() as f64);
            if !(power > 0.0) {
                return Err(Error::ZeroPower);
            }
            let s = 1.0 / power.sqrt();
            for r in g {
                scales[r] = s;
                out.row_mut(r).iter_mut().for_each(|v| *v *= s);
            }
        }
        Ok((
            out,
            PowerNormCache {
                input: z.clone(),
                scales,
            },
        ))
    }

    /// `∂L/∂z = s·g − (s³/M)·z·Σ(g⊙z)` per group of `M` complex samples.
    pub fn backward(&self, cache: &PowerNormCache, grad_out: &RealBatch) -> Result<RealBatch> {
        cache.input.same_shape(grad_out, "power normalization backward")?;
        let z = &cache.input;
        let complex_per_row = (z.cols() / 2) as f64;
        let mut grad = RealBatch::zeros(z.rows(), z.cols());
        for g in self.groups(z.rows()) {
            let m = complex_per_row * g.len() as f64;
            let s = cache.scales[g.start];
            let dot: f64 = g
                .clone()
                .flat_map(|r| grad_out.row(r).iter().zip(z.row(r)))
                .map(|(a, b)| a * b)
                .sum();
            let k = s * s * s / m * dot;
            for r in g {
                for ((o, &go), &zi) in grad.row_mut(r).iter_mut().zip(grad_out.row(r)).zip(z.row(r)) {
                    *o = s * go - k * zi;
                }
            }
        }
        Ok(grad)
    }
}

/// Scales a batch of blocks by one common factor so the mean per-sample power
/// over the batch is one; returns the scaled blocks and the factor.
pub fn normalize_power(blocks: &[ComplexBlock]) -> Result<(Vec<ComplexBlock>, f64)> {
    let samples: usize = blocks.iter().map(ComplexBlock::len).sum();
    if samples == 0 {
        return Err(Error::Dimension("empty block batch".into()));
    }
    let power = blocks.iter().map(ComplexBlock::energy).sum::<f64>() / samples as f64;
    if !(power > 0.0) {
        return Err(Error::ZeroPower);
    }
    let s = 1.0 / power.sqrt();
    let scaled = blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.samples_mut().iter_mut().for_each(|v| *v *= s);
            b
        })
        .collect();
    Ok((scaled, s))
}
