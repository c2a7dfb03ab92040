//! The non-trainable but differentiable channel.
//!
//! Per block the transmitted latent `w` is optionally taken to the time
//! domain with the unitary IFFT, rotated sample-by-sample by a Wiener phase
//! path `e^{jθ_i}`, optionally perturbed by OSNR-calibrated AWGN, and
//! optionally taken back with the unitary FFT. The backward pass is the exact
//! adjoint of that map with the drawn phase path and noise held fixed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::nn::RealBatch;
use crate::signal::{batch_to_blocks, blocks_to_batch, c2r, ComplexBlock, FftPlan};
use crate::{Error, Result};

pub const DEFAULT_SYMBOL_RATE_HZ: f64 = 32e9;
pub const DEFAULT_REFERENCE_BANDWIDTH_HZ: f64 = 12.5e9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPhase {
    /// `θ_0 = 0`.
    #[default]
    Zero,
    /// `θ_0 ~ U[0, 2π)`, drawn per block.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseNoiseConfig {
    pub linewidth_hz: f64,
    pub symbol_period_s: f64,
    pub initial_phase: InitialPhase,
}

impl PhaseNoiseConfig {
    pub fn new(linewidth_hz: f64, symbol_period_s: f64) -> Result<Self> {
        if !(linewidth_hz >= 0.0) || !linewidth_hz.is_finite() {
            return Err(Error::InvalidArgument(format!("linewidth {linewidth_hz} Hz")));
        }
        if !(symbol_period_s > 0.0) || !symbol_period_s.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "symbol period {symbol_period_s} s"
            )));
        }
        Ok(Self {
            linewidth_hz,
            symbol_period_s,
            initial_phase: InitialPhase::Zero,
        })
    }

    /// Variance of one random-walk increment, `σ² = 2π·Δv·T_s` (rad²).
    pub fn increment_variance(&self) -> f64 {
        2.0 * PI * self.linewidth_hz * self.symbol_period_s
    }
}

/// Draws `θ_0..θ_{n−1}` with `θ_{i+1} = θ_i + C_i`, `C_i ~ N(0, σ²)`.
pub fn gen_phase_path<R: Rng + ?Sized>(cfg: &PhaseNoiseConfig, n: usize, rng: &mut R) -> Vec<f64> {
    let sigma = cfg.increment_variance().sqrt();
    let theta0 = match cfg.initial_phase {
        InitialPhase::Zero => 0.0,
        InitialPhase::Uniform => rng.random_range(0.0..2.0 * PI),
    };
    let mut path = Vec::with_capacity(n);
    let mut theta = theta0;
    for i in 0..n {
        if i > 0 {
            let c: f64 = StandardNormal.sample(rng);
            theta += sigma * c;
        }
        path.push(theta);
    }
    path
}

/// Electrical SNR (dB) seen in the symbol-rate bandwidth for a given OSNR,
/// single polarization: `SNR = OSNR − 10·log10(R_s / (2·B_ref))`.
pub fn osnr_to_snr_db(osnr_db: f64, symbol_rate_hz: f64, reference_bandwidth_hz: f64) -> f64 {
    osnr_db - 10.0 * (symbol_rate_hz / (2.0 * reference_bandwidth_hz)).log10()
}

/// Inverse of [`osnr_to_snr_db`].
pub fn snr_to_osnr_db(snr_db: f64, symbol_rate_hz: f64, reference_bandwidth_hz: f64) -> f64 {
    snr_db + 10.0 * (symbol_rate_hz / (2.0 * reference_bandwidth_hz)).log10()
}

/// Per real component standard deviation of complex AWGN that yields
/// `osnr_db` for a signal of mean power `signal_power`.
pub fn osnr_to_noise_sigma(
    osnr_db: f64,
    symbol_rate_hz: f64,
    reference_bandwidth_hz: f64,
    signal_power: f64,
) -> Result<f64> {
    if !osnr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("OSNR {osnr_db} dB")));
    }
    for (name, v) in [
        ("symbol rate", symbol_rate_hz),
        ("reference bandwidth", reference_bandwidth_hz),
        ("signal power", signal_power),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let snr = 10f64.powf(osnr_db / 10.0) * 2.0 * reference_bandwidth_hz / symbol_rate_hz;
    let variance = signal_power / snr;
    Ok((variance / 2.0).sqrt())
}

/// Adds circular complex Gaussian noise with per-component std `sigma`.
pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [Complex64], sigma: f64, rng: &mut R) {
    for s in samples {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex64::new(sigma * re, sigma * im);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub linewidth_hz: f64,
    pub symbol_rate_hz: f64,
    pub reference_bandwidth_hz: f64,
    /// `None` disables AWGN.
    pub osnr_db: Option<f64>,
    pub use_ofdm_transforms: bool,
    pub initial_phase: InitialPhase,
}

impl ChannelConfig {
    /// Phase-noise-only channel with OFDM transforms and the 32 GBd default.
    pub fn phase_only(linewidth_hz: f64) -> Self {
        Self {
            linewidth_hz,
            symbol_rate_hz: DEFAULT_SYMBOL_RATE_HZ,
            reference_bandwidth_hz: DEFAULT_REFERENCE_BANDWIDTH_HZ,
            osnr_db: None,
            use_ofdm_transforms: true,
            initial_phase: InitialPhase::Zero,
        }
    }

    pub fn with_osnr(mut self, osnr_db: Option<f64>) -> Self {
        self.osnr_db = osnr_db;
        self
    }

    pub fn phase_noise(&self) -> Result<PhaseNoiseConfig> {
        if !(self.symbol_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "symbol rate {} Hz",
                self.symbol_rate_hz
            )));
        }
        let mut cfg = PhaseNoiseConfig::new(self.linewidth_hz, 1.0 / self.symbol_rate_hz)?;
        cfg.initial_phase = self.initial_phase;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.phase_noise()?;
        if !(self.reference_bandwidth_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference bandwidth {} Hz",
                self.reference_bandwidth_hz
            )));
        }
        if let Some(osnr) = self.osnr_db {
            if !osnr.is_finite() {
                return Err(Error::InvalidArgument(format!("OSNR {osnr} dB")));
            }
        }
        Ok(())
    }
}

/// One draw of the channel randomness for a batch of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    block_len: usize,
    /// Phase path per block.
    theta: Vec<Vec<f64>>,
    /// `e^{jθ_i}` per block.
    rotation: Vec<Vec<Complex64>>,
    /// Scaled time-domain noise per block; empty when AWGN is off.
    noise: Vec<Vec<Complex64>>,
    noise_sigma: Option<f64>,
}

impl ChannelRealization {
    /// Realization with the given phase paths and no noise.
    pub fn from_phase_paths(theta: Vec<Vec<f64>>) -> Result<Self> {
        let block_len = theta.first().map_or(0, Vec::len);
        if block_len == 0 || theta.iter().any(|t| t.len() != block_len) {
            return Err(Error::Dimension(
                "phase paths must share a non-zero length".into(),
            ));
        }
        let rotation = theta
            .iter()
            .map(|t| t.iter().map(|&p| Complex64::from_polar(1.0, p)).collect())
            .collect();
        Ok(Self {
            block_len,
            theta,
            rotation,
            noise: Vec::new(),
            noise_sigma: None,
        })
    }

    pub fn blocks(&self) -> usize {
        self.theta.len()
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn theta(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn noise_sigma(&self) -> Option<f64> {
        self.noise_sigma
    }
}

/// The channel bound to a block length, with its FFT plan.
#[derive(Debug, Clone)]
pub struct Channel {
    config: ChannelConfig,
    phase: PhaseNoiseConfig,
    plan: FftPlan,
}

impl Channel {
    pub fn new(config: ChannelConfig, block_len: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            phase: config.phase_noise()?,
            plan: FftPlan::new(block_len)?,
            config,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn block_len(&self) -> usize {
        self.plan.len()
    }

    /// Draws a fresh phase path per block and, when OSNR is set, noise
    /// calibrated to the mean power of `w`.
    pub fn realize<R: Rng + ?Sized>(&self, w: &RealBatch, rng: &mut R) -> Result<ChannelRealization> {
        let n = self.block_len();
        if w.cols() != 2 * n {
            return Err(Error::Dimension(format!(
                "channel for {n}-sample blocks got rows of {} reals",
                w.cols()
            )));
        }
        let signal_power = w.as_slice().iter().map(|v| v * v).sum::<f64>() / (w.rows() * n) as f64;
        let sigma = match self.config.osnr_db {
            Some(osnr) => Some(osnr_to_noise_sigma(
                osnr,
                self.config.symbol_rate_hz,
                self.config.reference_bandwidth_hz,
                signal_power,
            )?),
            None => None,
        };
        let mut theta = Vec::with_capacity(w.rows());
        let mut noise = Vec::new();
        for _ in 0..w.rows() {
            theta.push(gen_phase_path(&self.phase, n, rng));
            if let Some(sigma) = sigma {
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                add_awgn(&mut v, sigma, rng);
                noise.push(v);
            }
        }
        let mut realization = ChannelRealization::from_phase_paths(theta)?;
        realization.noise = noise;
        realization.noise_sigma = sigma;
        Ok(realization)
    }

    fn check(&self, realization: &ChannelRealization, batch: &RealBatch) -> Result<()> {
        if realization.block_len != self.block_len()
            || realization.blocks() != batch.rows()
            || batch.cols() != 2 * self.block_len()
        {
            return Err(Error::Dimension(format!(
                "channel realization for {}x{} blocks applied to a {}x{} batch",
                realization.blocks(),
                realization.block_len,
                batch.rows(),
                batch.cols() / 2
            )));
        }
        Ok(())
    }

    /// Applies a fixed realization to real-pair rows.
    pub fn apply(&self, realization: &ChannelRealization, w: &RealBatch) -> Result<RealBatch> {
        self.check(realization, w)?;
        let n = self.block_len();
        let mut out = RealBatch::zeros(w.rows(), w.cols());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..w.rows() {
            load(&mut buf, w.row(r));
            if self.config.use_ofdm_transforms {
                self.plan.inverse_in_place(&mut buf)?;
            }
            for (s, rot) in buf.iter_mut().zip(&realization.rotation[r]) {
                *s *= rot;
            }
            if let Some(noise) = realization.noise.get(r) {
                for (s, e) in buf.iter_mut().zip(noise) {
                    *s += e;
                }
            }
            if self.config.use_ofdm_transforms {
                self.plan.forward_in_place(&mut buf)?;
            }
            out.row_mut(r).copy_from_slice(&c2r(&buf));
        }
        Ok(out)
    }

    /// Adjoint of [`Channel::apply`]: IFFT, rotation by `−θ`, FFT.
    pub fn backward(&self, realization: &ChannelRealization, grad_r: &RealBatch) -> Result<RealBatch> {
        self.check(realization, grad_r)?;
        let n = self.block_len();
        let mut out = RealBatch::zeros(grad_r.rows(), grad_r.cols());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..grad_r.rows() {
            load(&mut buf, grad_r.row(r));
            if self.config.use_ofdm_transforms {
                self.plan.inverse_in_place(&mut buf)?;
            }
            for (s, rot) in buf.iter_mut().zip(&realization.rotation[r]) {
                *s *= rot.conj();
            }
            if self.config.use_ofdm_transforms {
                self.plan.forward_in_place(&mut buf)?;
            }
            out.row_mut(r).copy_from_slice(&c2r(&buf));
        }
        Ok(out)
    }

    /// Draws a realization and applies it.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        w: &RealBatch,
        rng: &mut R,
    ) -> Result<(RealBatch, ChannelRealization)> {
        let realization = self.realize(w, rng)?;
        let r = self.apply(&realization, w)?;
        Ok((r, realization))
    }
}

fn load(buf: &mut [Complex64], row: &[f64]) {
    let (re, im) = row.split_at(buf.len());
    for ((s, &a), &b) in buf.iter_mut().zip(re).zip(im) {
        *s = Complex64::new(a, b);
    }
}

/// Block-level convenience wrapper around [`Channel::forward`].
pub fn channel_forward<R: Rng + ?Sized>(
    config: &ChannelConfig,
    w: &[ComplexBlock],
    rng: &mut R,
) -> Result<(Vec<ComplexBlock>, ChannelRealization)> {
    let batch = blocks_to_batch(w)?;
    let channel = Channel::new(*config, w[0].len())?;
    let (r, realization) = channel.forward(&batch, rng)?;
    Ok((batch_to_blocks(&r)?, realization))
}
