use serde::{Deserialize, Serialize};

use super::RealBatch;
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Training,
    Inference,
}

/// Per-feature batch normalization with learned scale and shift.
///
/// Training mode normalizes each column by the batch mean and biased batch
/// variance. Inference mode uses the running statistics, which are updated
/// as `running = momentum·running + (1 − momentum)·batch` (with the unbiased
/// batch variance) by [`BatchNormLayer::update_running_stats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub epsilon: f64,
    pub momentum: f64,
}

/// State saved by the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    mode: Mode,
    x_hat: RealBatch,
    inv_std: Vec<f64>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads {
    pub input: RealBatch,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(dim: usize) -> Self {
        Self::with_hyperparameters(dim, DEFAULT_EPSILON, DEFAULT_MOMENTUM)
    }

    pub fn with_hyperparameters(dim: usize, epsilon: f64, momentum: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        assert!(momentum > 0.0 && momentum < 1.0, "momentum must lie in (0, 1)");
        Self {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            epsilon,
            momentum,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.beta.len() != d || self.running_mean.len() != d || self.running_var.len() != d {
            return Err(Error::Dimension("batch-norm vectors differ in length".into()));
        }
        if !(self.epsilon > 0.0) || !(self.momentum > 0.0 && self.momentum < 1.0) {
            return Err(Error::InvalidArgument("batch-norm epsilon/momentum".into()));
        }
        if self.running_var.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("negative running variance".into()));
        }
        Ok(())
    }

    pub fn params_mut(&mut self) -> [&mut [f64]; 2] {
        [&mut self.gamma, &mut self.beta]
    }

    pub fn forward(&self, x: &RealBatch, mode: Mode) -> Result<(RealBatch, BatchNormCache)> {
        let (b, d) = (x.rows(), x.cols());
        if d != self.dim() {
            return Err(Error::Dimension(format!(
                "batch-norm input has {d} columns, layer has {}",
                self.dim()
            )));
        }
        let (mean, var) = match mode {
            Mode::Training => {
                if b < 2 {
                    return Err(Error::BatchTooSmall(b));
                }
                column_moments(x)
            }
            Mode::Inference => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();

        let mut x_hat = x.clone();
        let mut out = RealBatch::zeros(b, d);
        for r in 0..b {
            let xh = x_hat.row_mut(r);
            for c in 0..d {
                xh[c] = (xh[c] - mean[c]) * inv_std[c];
            }
            let o = out.row_mut(r);
            for c in 0..d {
                o[c] = self.gamma[c] * xh[c] + self.beta[c];
            }
        }
        Ok((
            out,
            BatchNormCache {
                mode,
                x_hat,
                inv_std,
                batch_mean: mean,
                batch_var: var,
            },
        ))
    }

    /// Exact gradients of the training-mode transform, including the
    /// dependence of the batch mean and variance on the input.
    pub fn backward(&self, cache: &BatchNormCache, grad_out: &RealBatch) -> Result<BatchNormGrads> {
        if cache.mode != Mode::Training {
            return Err(Error::ModeMismatch(
                "batch-norm backward needs a training-mode forward pass".into(),
            ));
        }
        cache.x_hat.same_shape(grad_out, "batch-norm backward")?;
        let (b, d) = (grad_out.rows(), grad_out.cols());
        let mut grad_gamma = vec![0.0; d];
        let mut grad_beta = vec![0.0; d];
        for r in 0..b {
            let g = grad_out.row(r);
            let xh = cache.x_hat.row(r);
            for c in 0..d {
                grad_beta[c] += g[c];
                grad_gamma[c] += g[c] * xh[c];
            }
        }
        // dx = γ·inv_std/B · (B·g − Σg − x̂·Σ(g·x̂))
        let inv_b = 1.0 / b as f64;
        let mut input = RealBatch::zeros(b, d);
        for r in 0..b {
            let g = grad_out.row(r);
            let xh = cache.x_hat.row(r);
            let out = input.row_mut(r);
            for c in 0..d {
                out[c] = self.gamma[c]
                    * cache.inv_std[c]
                    * (g[c] - inv_b * grad_beta[c] - inv_b * xh[c] * grad_gamma[c]);
            }
        }
        Ok(BatchNormGrads {
            input,
            gamma: grad_gamma,
            beta: grad_beta,
        })
    }

    /// Folds the batch statistics of a training-mode pass into the running stats.
    pub fn update_running_stats(&mut self, cache: &BatchNormCache) {
        if cache.mode != Mode::Training {
            return;
        }
        let b = cache.x_hat.rows() as f64;
        let bessel = b / (b - 1.0);
        let m = self.momentum;
        for c in 0..self.dim() {
            self.running_mean[c] = m * self.running_mean[c] + (1.0 - m) * cache.batch_mean[c];
            self.running_var[c] = m * self.running_var[c] + (1.0 - m) * cache.batch_var[c] * bessel;
        }
    }
}

/// Column means and biased variances.
fn column_moments(x: &RealBatch) -> (Vec<f64>, Vec<f64>) {
    let (b, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for r in 0..b {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= b as f64);
    let mut var = vec![0.0; d];
    for r in 0..b {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= b as f64);
    (mean, var)
}
