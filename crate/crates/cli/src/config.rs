//! TOML run configuration. Key names carry their units (`_hz`, `_db`, `_s`).

use std::path::{Path, PathBuf};

use coofdm_ae::autoencoder::{default_hidden_width, TrainConfig};
use coofdm_ae::channel::{InitialPhase, DEFAULT_REFERENCE_BANDWIDTH_HZ, DEFAULT_SYMBOL_RATE_HZ};
use coofdm_ae::experiments::{StopRule, SweepSpec, DEFAULT_FEC_THRESHOLD};
use coofdm_ae::nn::CallbackConfig;
use coofdm_ae::signal::NormalizationMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Top-level seed; every random stream of the run derives from it.
    pub seed: u64,
    /// Where checkpoints, tables and manifests go. Relative paths are taken
    /// from the config file's directory.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub channel: ChannelSection,
    pub train: TrainSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub symbol_rate_hz: f64,
    pub reference_bandwidth_hz: f64,
    pub initial_phase: InitialPhase,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            symbol_rate_hz: DEFAULT_SYMBOL_RATE_HZ,
            reference_bandwidth_hz: DEFAULT_REFERENCE_BANDWIDTH_HZ,
            initial_phase: InitialPhase::Zero,
        }
    }
}

fn default_steps() -> usize {
    100
}
fn default_epochs() -> usize {
    300
}
fn default_lr() -> f64 {
    1e-3
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    /// Subcarriers per OFDM block (`N`).
    pub fft_size: usize,
    /// One model is trained per entry.
    pub linewidths_hz: Vec<f64>,
    /// Units per hidden layer; `4·fft_size` when absent.
    pub hidden_width: Option<usize>,
    /// Blocks per batch; `fft_size` when absent.
    pub batch_size: Option<usize>,
    #[serde(default = "default_steps")]
    pub steps_per_epoch: usize,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "yes")]
    pub use_ofdm_transforms: bool,
    #[serde(default)]
    pub awgn_in_training: bool,
    pub train_osnr_db: Option<f64>,
    #[serde(default)]
    pub normalization: NormalizationMode,
    #[serde(default)]
    pub callbacks: CallbackConfig,
}

fn default_target_errors() -> u64 {
    100
}
fn default_max_bits() -> u64 {
    10_000_000
}
fn default_blocks_per_batch() -> usize {
    64
}
fn default_fec() -> f64 {
    DEFAULT_FEC_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub linewidths_hz: Vec<f64>,
    pub osnr_db: Vec<f64>,
    #[serde(default = "default_target_errors")]
    pub target_errors: u64,
    /// At least `4·fft_size`; one block when absent.
    pub min_bits: Option<u64>,
    #[serde(default = "default_max_bits")]
    pub max_bits: u64,
    #[serde(default = "default_blocks_per_batch")]
    pub blocks_per_batch: usize,
    #[serde(default = "default_fec")]
    pub fec_threshold: f64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates `path`; `output_dir` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if cfg.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output_dir = parent.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: String| Err(CliError::Config(format!("{key}: {why}")));
        let t = &self.train;
        if t.linewidths_hz.is_empty() {
            return bad("train.linewidths_hz", "needs at least one linewidth".into());
        }
        if t.linewidths_hz.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return bad("train.linewidths_hz", "linewidths must be finite and >= 0".into());
        }
        for lw in &t.linewidths_hz {
            self.train_config(*lw)
                .validate()
                .or_else(|e| bad("train", e.to_string()))?;
        }
        if let Some(s) = &self.sweep {
            self.sweep_spec("check")
                .and_then(|spec| {
                    spec.validate(t.fft_size)
                        .map_err(|e| CliError::Config(e.to_string()))
                })
                .or_else(|e| bad("sweep", e.to_string()))?;
            if s.linewidths_hz.is_empty() || s.osnr_db.is_empty() {
                return bad("sweep", "linewidths_hz and osnr_db must be non-empty".into());
            }
        }
        Ok(())
    }

    /// Training settings for one model at `linewidth_hz`.
    pub fn train_config(&self, linewidth_hz: f64) -> TrainConfig {
        let t = &self.train;
        let mut cfg = TrainConfig::new(t.fft_size, linewidth_hz, self.seed);
        cfg.hidden_width = t.hidden_width.unwrap_or_else(|| default_hidden_width(t.fft_size));
        cfg.batch_size = t.batch_size.unwrap_or(t.fft_size);
        cfg.steps_per_epoch = t.steps_per_epoch;
        cfg.max_epochs = t.max_epochs;
        cfg.learning_rate = t.learning_rate;
        cfg.callbacks = t.callbacks;
        cfg.use_ofdm_transforms = t.use_ofdm_transforms;
        cfg.awgn_in_training = t.awgn_in_training;
        cfg.train_osnr_db = t.train_osnr_db;
        cfg.initial_phase = self.channel.initial_phase;
        cfg.normalization = t.normalization;
        cfg.symbol_rate_hz = self.channel.symbol_rate_hz;
        cfg.reference_bandwidth_hz = self.channel.reference_bandwidth_hz;
        cfg
    }

    pub fn sweep_spec(&self, model_tag: &str) -> Result<SweepSpec, CliError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
        let n = self.train.fft_size as u64;
        Ok(SweepSpec {
            model_tag: model_tag.to_string(),
            linewidths_hz: s.linewidths_hz.clone(),
            osnr_db: s.osnr_db.clone(),
            stop: StopRule {
                target_errors: s.target_errors,
                min_bits: s.min_bits.unwrap_or(4 * n),
                max_bits: s.max_bits,
                blocks_per_batch: s.blocks_per_batch,
            },
            fec_threshold: s.fec_threshold,
            symbol_rate_hz: self.channel.symbol_rate_hz,
            reference_bandwidth_hz: self.channel.reference_bandwidth_hz,
            initial_phase: self.channel.initial_phase,
            seed: self.seed,
        })
    }
}
