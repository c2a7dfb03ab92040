use serde::{Deserialize, Serialize};

use super::model::{default_hidden_width, forward_backward_traced, AeModel, TrainingMetadata};
use crate::channel::{
    Channel, ChannelConfig, InitialPhase, DEFAULT_REFERENCE_BANDWIDTH_HZ, DEFAULT_SYMBOL_RATE_HZ,
};
use crate::modem::{gen_random_bits, map_16qam, BITS_PER_SYMBOL};
use crate::nn::{AdamConfig, AdamState, CallbackAction, CallbackConfig, RealBatch, TrainerCallbacks};
use crate::rng;
use crate::signal::{c2r, NormalizationMode};
use crate::{Error, Result};

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Block length `N` (FFT size).
    pub n: usize,
    /// Units per hidden layer.
    pub hidden_width: usize,
    /// Linewidth of the training channel (Hz).
    pub linewidth_hz: f64,
    pub symbol_rate_hz: f64,
    pub reference_bandwidth_hz: f64,
    /// Blocks per batch.
    pub batch_size: usize,
    pub steps_per_epoch: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub callbacks: CallbackConfig,
    pub use_ofdm_transforms: bool,
    /// Adds AWGN at `train_osnr_db` during training.
    pub awgn_in_training: bool,
    pub train_osnr_db: Option<f64>,
    pub initial_phase: InitialPhase,
    pub normalization: NormalizationMode,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults for block length `n`: hidden width `4n`, batch size `n`, 100 steps per epoch,
    /// learning rate 1e-3, phase-noise-only channel with OFDM transforms.
    pub fn new(n: usize, linewidth_hz: f64, seed: u64) -> Self {
        Self {
            n,
            hidden_width: default_hidden_width(n),
            linewidth_hz,
            symbol_rate_hz: DEFAULT_SYMBOL_RATE_HZ,
            reference_bandwidth_hz: DEFAULT_REFERENCE_BANDWIDTH_HZ,
            batch_size: n,
            steps_per_epoch: 100,
            max_epochs: 300,
            learning_rate: 1e-3,
            callbacks: CallbackConfig::default(),
            use_ofdm_transforms: true,
            awgn_in_training: false,
            train_osnr_db: None,
            initial_phase: InitialPhase::Zero,
            normalization: NormalizationMode::Batch,
            seed,
        }
    }

    pub fn channel_config(&self) -> ChannelConfig {
        ChannelConfig {
            linewidth_hz: self.linewidth_hz,
            symbol_rate_hz: self.symbol_rate_hz,
            reference_bandwidth_hz: self.reference_bandwidth_hz,
            osnr_db: if self.awgn_in_training {
                self.train_osnr_db
            } else {
                None
            },
            use_ofdm_transforms: self.use_ofdm_transforms,
            initial_phase: self.initial_phase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n));
        }
        if self.hidden_width == 0 {
            return Err(Error::InvalidArgument("hidden_width must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "batch_size {} < 2 (batch normalization)",
                self.batch_size
            )));
        }
        if self.max_epochs == 0 || self.steps_per_epoch == 0 {
            return Err(Error::InvalidArgument(
                "max_epochs and steps_per_epoch must be >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate {}",
                self.learning_rate
            )));
        }
        if self.awgn_in_training && self.train_osnr_db.is_none() {
            return Err(Error::InvalidArgument(
                "awgn_in_training needs train_osnr_db".into(),
            ));
        }
        self.callbacks.validate().map_err(Error::InvalidArgument)?;
        self.channel_config().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean training loss over the epoch's steps.
    pub loss: f64,
    /// Learning rate used during the epoch.
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best epoch.
    pub model: AeModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainOutcome {
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.loss).collect()
    }
}

/// Random 16-QAM blocks packed as real-pair rows.
pub(crate) fn random_qam_batch<R: rand::Rng + ?Sized>(
    blocks: usize,
    n: usize,
    rng: &mut R,
) -> Result<(RealBatch, crate::modem::BitBlock)> {
    let bits = gen_random_bits(blocks * n * BITS_PER_SYMBOL, rng)?;
    let symbols = map_16qam(&bits);
    let data: Vec<f64> = symbols.chunks_exact(n).flat_map(c2r).collect();
    Ok((RealBatch::new(blocks, 2 * n, data)?, bits))
}

/// End-to-end training: every step draws fresh random 16-QAM blocks and a
/// fresh channel realization, back-propagates the MSE through decoder,
/// channel and encoder, and applies one Adam update. The plateau and
/// early-stopping callbacks see the epoch-mean loss. The parameters of the
/// best epoch are returned together with the full history.
///
/// `on_epoch` is called after every epoch.
pub fn train_autoencoder(cfg: &TrainConfig, mut on_epoch: impl FnMut(&EpochRecord)) -> Result<TrainOutcome> {
    cfg.validate()?;
    let channel = Channel::new(cfg.channel_config(), cfg.n)?;
    let mut model = AeModel::with_hidden_width(
        cfg.n,
        cfg.hidden_width,
        &mut rng::stream(cfg.seed, rng::STREAM_INIT),
    )?;
    model.normalization = cfg.normalization;
    model.metadata = TrainingMetadata {
        linewidth_hz: cfg.linewidth_hz,
        symbol_period_s: 1.0 / cfg.symbol_rate_hz,
        seed: cfg.seed,
        ..TrainingMetadata::default()
    };
    let mut data_rng = rng::stream(cfg.seed, rng::STREAM_TRAIN_DATA);
    let mut channel_rng = rng::stream(cfg.seed, rng::STREAM_TRAIN_CHANNEL);
    let mut adam = AdamState::new(AdamConfig::default());
    let mut callbacks = TrainerCallbacks::new(cfg.callbacks, cfg.learning_rate);

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, AeModel)> = None;
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        let lr = callbacks.learning_rate();
        let mut total = 0.0;
        for _ in 0..cfg.steps_per_epoch {
            let (x, _) = random_qam_batch(cfg.batch_size, cfg.n, &mut data_rng)?;
            let step =
                forward_backward_traced(&model, &x, &channel, |w| channel.realize(w, &mut channel_rng));
            let (loss, grads, trace, _) = match step {
                Ok(v) => v,
                Err(e @ (Error::NonFinite(_) | Error::ZeroPower)) => {
                    return Err(diverged(epoch, e.to_string(), best));
                }
                Err(e) => return Err(e),
            };
            let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            if let Err(e) = adam.step(&mut model.param_slices_mut(), &grad_refs, lr) {
                return Err(diverged(epoch, e.to_string(), best));
            }
            model.update_running_stats(&trace);
            total += loss;
        }
        let loss = total / cfg.steps_per_epoch as f64;
        if !loss.is_finite() {
            return Err(diverged(epoch, format!("epoch loss is {loss}"), best));
        }
        let record = EpochRecord {
            epoch,
            loss,
            learning_rate: lr,
        };
        on_epoch(&record);
        history.push(record);

        if best.as_ref().is_none_or(|(b, _, _)| loss < *b) {
            best = Some((loss, epoch, model.clone()));
        }
        match callbacks.on_epoch_end(loss) {
            CallbackAction::Stop => {
                stopped_early = true;
                break;
            }
            CallbackAction::ReduceLr | CallbackAction::Continue => {}
        }
    }

    let (best_loss, best_epoch, mut model) = best.expect("at least one epoch ran");
    model.metadata.epochs_run = history.len() as u64;
    model.metadata.final_loss = history.last().map_or(f64::NAN, |r| r.loss);
    model.metadata.best_loss = best_loss;
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        stopped_early,
    })
}

fn diverged(epoch: usize, reason: String, best: Option<(f64, usize, AeModel)>) -> Error {
    Error::Diverged {
        epoch,
        reason,
        last_good: best.map(|(_, _, m)| Box::new(m)),
    }
}
