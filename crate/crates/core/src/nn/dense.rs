use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::batch::{gemm, RealBatch};
use crate::{Error, Result};

/// Affine layer `y = x·W + b` with `W` stored row-major as `in_dim × out_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub input: RealBatch,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Dimension("dense layer dims must be > 0".into()));
        }
        if weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::Dimension(format!(
                "dense {in_dim}->{out_dim}: got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense layer parameters".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self::new(in_dim, out_dim, vec![0.0; in_dim * out_dim], vec![0.0; out_dim]).expect("zero layer dims")
    }

    /// He/Kaiming uniform initialization: `U(-√(6/fan_in), √(6/fan_in))`, zero bias.
    pub fn he_uniform<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = (6.0 / in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        let weights = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        Self::new(in_dim, out_dim, weights, vec![0.0; out_dim]).expect("valid dims")
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Mutable views of `[weights, bias]`, in the order Adam expects.
    pub fn params_mut(&mut self) -> [&mut [f64]; 2] {
        [&mut self.weights, &mut self.bias]
    }

    pub fn forward(&self, x: &RealBatch) -> Result<RealBatch> {
        if x.cols() != self.in_dim {
            return Err(Error::Dimension(format!(
                "dense input has {} columns, layer expects {}",
                x.cols(),
                self.in_dim
            )));
        }
        let mut out = RealBatch::zeros(x.rows(), self.out_dim);
        for r in 0..x.rows() {
            out.row_mut(r).copy_from_slice(&self.bias);
        }
        gemm(
            x.rows(),
            self.in_dim,
            self.out_dim,
            x.as_slice(),
            false,
            &self.weights,
            false,
            out.as_mut_slice(),
            true,
        );
        Ok(out)
    }

    /// Gradients given the forward input `x` and `grad_out = ∂L/∂y`.
    pub fn backward(&self, x: &RealBatch, grad_out: &RealBatch) -> Result<DenseGrads> {
        if x.cols() != self.in_dim || grad_out.cols() != self.out_dim || x.rows() != grad_out.rows() {
            return Err(Error::Dimension(format!(
                "dense backward: input {}x{}, grad {}x{}, layer {}->{}",
                x.rows(),
                x.cols(),
                grad_out.rows(),
                grad_out.cols(),
                self.in_dim,
                self.out_dim
            )));
        }
        let b = x.rows();
        let mut weights = vec![0.0; self.in_dim * self.out_dim];
        gemm(
            self.in_dim,
            b,
            self.out_dim,
            x.as_slice(),
            true,
            grad_out.as_slice(),
            false,
            &mut weights,
            false,
        );
        let mut bias = vec![0.0; self.out_dim];
        for r in 0..b {
            for (acc, g) in bias.iter_mut().zip(grad_out.row(r)) {
                *acc += g;
            }
        }
        let mut input = RealBatch::zeros(b, self.in_dim);
        gemm(
            b,
            self.out_dim,
            self.in_dim,
            grad_out.as_slice(),
            false,
            &self.weights,
            true,
            input.as_mut_slice(),
            false,
        );
        Ok(DenseGrads { input, weights, bias })
    }
}
