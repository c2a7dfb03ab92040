use rand::Rng;
use serde::Serialize;

use crate::channel::{Channel, ChannelRealization};
use crate::nn::{
    mse_loss, relu_backward, relu_forward, BatchNormCache, BatchNormLayer, DenseLayer, Mode, RealBatch,
};
use crate::signal::{batch_to_blocks, blocks_to_batch, ComplexBlock, NormalizationMode, PowerNormalizer};
use crate::{Error, Result};

/// Hidden layers per stack, each `Dense → ReLU → BatchNorm`, followed by one
/// linear dense layer.
pub const HIDDEN_LAYERS: usize = 2;

/// One side of the autoencoder: `2N → H → H → 2N` reals, where `H` is the
/// hidden width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stack {
    pub hidden: Vec<(DenseLayer, BatchNormLayer)>,
    pub output: DenseLayer,
}

#[derive(Debug, Clone)]
struct HiddenCache {
    input: RealBatch,
    pre_relu: RealBatch,
    bn: BatchNormCache,
}

#[derive(Debug, Clone)]
struct StackCache {
    hidden: Vec<HiddenCache>,
    output_input: RealBatch,
}

impl Stack {
    fn new<R: Rng + ?Sized>(io_width: usize, hidden_width: usize, rng: &mut R) -> Self {
        let hidden = (0..HIDDEN_LAYERS)
            .map(|i| {
                let fan_in = if i == 0 { io_width } else { hidden_width };
                (
                    DenseLayer::he_uniform(fan_in, hidden_width, rng),
                    BatchNormLayer::new(hidden_width),
                )
            })
            .collect();
        Self {
            hidden,
            output: DenseLayer::he_uniform(hidden_width, io_width, rng),
        }
    }

    /// Input and output width (`2N`).
    pub fn width(&self) -> usize {
        self.output.out_dim()
    }

    pub fn hidden_width(&self) -> usize {
        self.output.in_dim()
    }

    pub(crate) fn validate(&self, io_width: usize, hidden_width: usize) -> Result<()> {
        let shape_ok = self.hidden.len() == HIDDEN_LAYERS
            && self.output.in_dim() == hidden_width
            && self.output.out_dim() == io_width
            && self.hidden.iter().enumerate().all(|(i, (d, bn))| {
                let fan_in = if i == 0 { io_width } else { hidden_width };
                d.in_dim() == fan_in && d.out_dim() == hidden_width && bn.dim() == hidden_width
            });
        if !shape_ok {
            return Err(Error::Dimension(format!(
                "stack does not match {io_width} -> {HIDDEN_LAYERS}x{hidden_width} -> {io_width}"
            )));
        }
        self.hidden.iter().try_for_each(|(_, bn)| bn.validate())
    }

    fn forward(&self, x: &RealBatch, mode: Mode) -> Result<(RealBatch, StackCache)> {
        let mut h = x.clone();
        let mut hidden = Vec::with_capacity(self.hidden.len());
        for (dense, bn) in &self.hidden {
            let pre_relu = dense.forward(&h)?;
            let (next, bn_cache) = bn.forward(&relu_forward(&pre_relu), mode)?;
            hidden.push(HiddenCache {
                input: h,
                pre_relu,
                bn: bn_cache,
            });
            h = next;
        }
        let out = self.output.forward(&h)?;
        Ok((
            out,
            StackCache {
                hidden,
                output_input: h,
            },
        ))
    }

    /// Returns the input gradient and appends parameter gradients to `grads`
    /// in [`Stack::param_slices`] order.
    fn backward(
        &self,
        cache: &StackCache,
        grad_out: &RealBatch,
        grads: &mut Vec<Vec<f64>>,
    ) -> Result<RealBatch> {
        let out = self.output.backward(&cache.output_input, grad_out)?;
        let mut g = out.input;
        let mut per_layer = Vec::with_capacity(self.hidden.len());
        for ((dense, bn), hc) in self.hidden.iter().zip(&cache.hidden).rev() {
            let bn_grads = bn.backward(&hc.bn, &g)?;
            let g_dense = relu_backward(&hc.pre_relu, &bn_grads.input)?;
            let d = dense.backward(&hc.input, &g_dense)?;
            g = d.input;
            per_layer.push([d.weights, d.bias, bn_grads.gamma, bn_grads.beta]);
        }
        for layer in per_layer.into_iter().rev() {
            grads.extend(layer);
        }
        grads.push(out.weights);
        grads.push(out.bias);
        Ok(g)
    }

    fn update_running_stats(&mut self, cache: &StackCache) {
        for ((_, bn), hc) in self.hidden.iter_mut().zip(&cache.hidden) {
            bn.update_running_stats(&hc.bn);
        }
    }

    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for (d, bn) in &self.hidden {
            v.extend([d.weights(), d.bias(), &bn.gamma[..], &bn.beta[..]]);
        }
        v.extend([self.output.weights(), self.output.bias()]);
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for (d, bn) in &mut self.hidden {
            let [w, b] = d.params_mut();
            let [gamma, beta] = bn.params_mut();
            v.extend([w, b, gamma, beta]);
        }
        let [w, b] = self.output.params_mut();
        v.extend([w, b]);
        v
    }
}

/// Hidden width used when none is configured: twice the `2N` real input,
/// so each coordinate can pass through a ReLU as a `(x)+, (-x)+` pair.
pub fn default_hidden_width(n: usize) -> usize {
    4 * n
}

/// Provenance stored alongside the parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingMetadata {
    pub linewidth_hz: f64,
    pub symbol_period_s: f64,
    pub seed: u64,
    pub epochs_run: u64,
    pub final_loss: f64,
    pub best_loss: f64,
}

impl Default for TrainingMetadata {
    fn default() -> Self {
        Self {
            linewidth_hz: 0.0,
            symbol_period_s: 1.0 / crate::channel::DEFAULT_SYMBOL_RATE_HZ,
            seed: 0,
            epochs_run: 0,
            final_loss: f64::NAN,
            best_loss: f64::NAN,
        }
    }
}

/// Encoder and decoder for blocks of `N` complex symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AeModel {
    n: usize,
    pub encoder: Stack,
    pub decoder: Stack,
    pub normalization: NormalizationMode,
    pub metadata: TrainingMetadata,
}

/// Parameter gradients in [`AeModel::param_slices`] order.
pub type AeGrads = Vec<Vec<f64>>;

/// Intermediate values of one training-mode pass.
pub(crate) struct ForwardTrace {
    enc: StackCache,
    dec: StackCache,
}

impl AeModel {
    /// Freshly initialized model with the default hidden width `4N`
    /// (He-uniform weights, identity batch norm).
    pub fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::with_hidden_width(n, default_hidden_width(n), rng)
    }

    pub fn with_hidden_width<R: Rng + ?Sized>(n: usize, hidden_width: usize, rng: &mut R) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if hidden_width == 0 {
            return Err(Error::InvalidArgument("hidden width must be positive".into()));
        }
        Ok(Self {
            n,
            encoder: Stack::new(2 * n, hidden_width, rng),
            decoder: Stack::new(2 * n, hidden_width, rng),
            normalization: NormalizationMode::Batch,
            metadata: TrainingMetadata::default(),
        })
    }

    pub(crate) fn from_parts(
        n: usize,
        encoder: Stack,
        decoder: Stack,
        normalization: NormalizationMode,
        metadata: TrainingMetadata,
    ) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let hidden_width = encoder.hidden_width();
        encoder.validate(2 * n, hidden_width)?;
        decoder.validate(2 * n, hidden_width)?;
        Ok(Self {
            n,
            encoder,
            decoder,
            normalization,
            metadata,
        })
    }

    /// Block length `N` (complex symbols per block).
    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn hidden_width(&self) -> usize {
        self.encoder.hidden_width()
    }

    fn check_input(&self, x: &RealBatch, what: &str) -> Result<()> {
        if x.cols() != 2 * self.n {
            return Err(Error::Dimension(format!(
                "{what} expects {} complex samples per block, got {}",
                self.n,
                x.cols() / 2
            )));
        }
        Ok(())
    }

    /// `x` (real-pair rows) to the unit-power latent `w`.
    pub fn encoder_forward(&self, x: &RealBatch, mode: Mode) -> Result<RealBatch> {
        self.check_input(x, "encoder")?;
        let (z, _) = self.encoder.forward(x, mode)?;
        let (w, _) = PowerNormalizer::new(self.normalization).forward(&z)?;
        Ok(w)
    }

    pub fn decoder_forward(&self, r: &RealBatch, mode: Mode) -> Result<RealBatch> {
        self.check_input(r, "decoder")?;
        Ok(self.decoder.forward(r, mode)?.0)
    }

    pub fn encode(&self, x: &[ComplexBlock], mode: Mode) -> Result<Vec<ComplexBlock>> {
        batch_to_blocks(&self.encoder_forward(&blocks_to_batch(x)?, mode)?)
    }

    pub fn decode(&self, r: &[ComplexBlock], mode: Mode) -> Result<Vec<ComplexBlock>> {
        batch_to_blocks(&self.decoder_forward(&blocks_to_batch(r)?, mode)?)
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.encoder.param_slices();
        v.extend(self.decoder.param_slices());
        v
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.encoder.param_slices_mut();
        v.extend(self.decoder.param_slices_mut());
        v
    }

    /// All trainable parameters concatenated.
    pub fn flat_params(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.param_slices().iter().map(|s| s.len()).sum();
        if flat.len() != total {
            return Err(Error::Dimension(format!(
                "{} parameters given, model has {total}",
                flat.len()
            )));
        }
        let mut offset = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }

    pub(crate) fn update_running_stats(&mut self, trace: &ForwardTrace) {
        self.encoder.update_running_stats(&trace.enc);
        self.decoder.update_running_stats(&trace.dec);
    }
}

/// Training-mode loss and gradients. `realize` supplies the channel
/// realization given the normalized latent.
pub(crate) fn forward_backward_traced<F>(
    model: &AeModel,
    x: &RealBatch,
    channel: &Channel,
    realize: F,
) -> Result<(f64, AeGrads, ForwardTrace, ChannelRealization)>
where
    F: FnOnce(&RealBatch) -> Result<ChannelRealization>,
{
    model.check_input(x, "autoencoder")?;
    let normalizer = PowerNormalizer::new(model.normalization);
    let (z, enc) = model.encoder.forward(x, Mode::Training)?;
    let (w, norm) = normalizer.forward(&z)?;
    let realization = realize(&w)?;
    let r = channel.apply(&realization, &w)?;
    let (x_hat, dec) = model.decoder.forward(&r, Mode::Training)?;
    let (loss, g_xhat) = mse_loss(&x_hat, x)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss is {loss}")));
    }

    let mut dec_grads = Vec::new();
    let g_r = model.decoder.backward(&dec, &g_xhat, &mut dec_grads)?;
    let g_w = channel.backward(&realization, &g_r)?;
    let g_z = normalizer.backward(&norm, &g_w)?;
    let mut grads = Vec::new();
    model.encoder.backward(&enc, &g_z, &mut grads)?;
    grads.extend(dec_grads);
    Ok((loss, grads, ForwardTrace { enc, dec }, realization))
}

/// Loss and exact parameter gradients through encoder, channel and decoder,
/// with the channel randomness fixed to `realization`.
pub fn ae_forward_backward_fixed(
    model: &AeModel,
    x: &RealBatch,
    channel: &Channel,
    realization: &ChannelRealization,
) -> Result<(f64, AeGrads)> {
    let (loss, grads, _, _) = forward_backward_traced(model, x, channel, |_| Ok(realization.clone()))?;
    Ok((loss, grads))
}

/// Like [`ae_forward_backward_fixed`] but draws a fresh channel realization,
/// which is returned for reuse.
pub fn ae_forward_backward<R: Rng + ?Sized>(
    model: &AeModel,
    x: &RealBatch,
    channel: &Channel,
    rng: &mut R,
) -> Result<(f64, AeGrads, ChannelRealization)> {
    let (loss, grads, _, realization) =
        forward_backward_traced(model, x, channel, |w| channel.realize(w, rng))?;
    Ok((loss, grads, realization))
}

/// Training-mode loss for a fixed realization, without gradients.
pub fn training_loss(
    model: &AeModel,
    x: &RealBatch,
    channel: &Channel,
    realization: &ChannelRealization,
) -> Result<f64> {
    let (z, _) = model.encoder.forward(x, Mode::Training)?;
    let (w, _) = PowerNormalizer::new(model.normalization).forward(&z)?;
    let r = channel.apply(realization, &w)?;
    let (x_hat, _) = model.decoder.forward(&r, Mode::Training)?;
    Ok(mse_loss(&x_hat, x)?.0)
}
