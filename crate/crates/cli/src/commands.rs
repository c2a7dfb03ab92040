use std::path::{Path, PathBuf};
use std::time::Instant;

use coofdm_ae::autoencoder::{load_model, save_model, train_autoencoder, AeModel, EpochRecord};
use coofdm_ae::experiments::{
    ber_osnr_sweep, emit_dat, linewidth_label, write_result_json, DatTable, Scheme, SweepResult,
};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::{write_json, CliError};

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

/// Column tags for `linewidths`, made unique by suffixing `_2`, `_3`, ...
fn unique_tags(labels: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for label in labels {
        let mut tag = label.clone();
        let mut k = 2;
        while out.contains(&tag) {
            tag = format!("{label}_{k}");
            k += 1;
        }
        out.push(tag);
    }
    out
}

pub fn checkpoint_path(cfg: &RunConfig, tag: &str) -> PathBuf {
    cfg.output_dir.join(format!("model_{tag}.coae"))
}

fn train_tags(cfg: &RunConfig) -> Vec<String> {
    unique_tags(cfg.train.linewidths_hz.iter().map(|&lw| linewidth_label(lw)))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainedRun {
    pub tag: String,
    pub linewidth_hz: f64,
    pub checkpoint: PathBuf,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub first_loss: f64,
    pub best_loss: f64,
    pub final_loss: f64,
    pub stopped_early: bool,
    pub duration_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcomeSummary {
    pub runs: Vec<TrainedRun>,
    pub loss_dat: PathBuf,
    pub manifest: PathBuf,
}

/// Trains one model per configured linewidth and writes `model_<tag>.coae`,
/// `loss.dat` and `manifest_train.json` into the output directory.
pub fn cmd_train(
    cfg: &RunConfig,
    config_path: Option<&Path>,
    mut progress: impl FnMut(&str, &EpochRecord),
) -> Result<TrainOutcomeSummary, CliError> {
    ensure_dir(&cfg.output_dir)?;
    let started = Instant::now();
    let mut runs = Vec::new();
    let mut columns = Vec::new();
    for (tag, &lw) in train_tags(cfg).into_iter().zip(&cfg.train.linewidths_hz) {
        let t0 = Instant::now();
        let checkpoint = checkpoint_path(cfg, &tag);
        let outcome = match train_autoencoder(&cfg.train_config(lw), |r| progress(&tag, r)) {
            Ok(o) => o,
            Err(coofdm_ae::Error::Diverged {
                epoch,
                reason,
                last_good,
            }) => {
                let mut msg = format!("training {tag} diverged at epoch {epoch}: {reason}");
                if let Some(model) = last_good {
                    let path = cfg.output_dir.join(format!("model_{tag}.last_good.coae"));
                    save_model(&model, &path)?;
                    msg.push_str(&format!("; last good parameters saved to {}", path.display()));
                }
                return Err(CliError::Runtime(msg));
            }
            Err(e) => return Err(e.into()),
        };
        save_model(&outcome.model, &checkpoint)?;
        let losses = outcome.losses();
        runs.push(TrainedRun {
            tag: tag.clone(),
            linewidth_hz: lw,
            checkpoint,
            epochs_run: losses.len(),
            best_epoch: outcome.best_epoch,
            first_loss: losses[0],
            best_loss: outcome.model.metadata.best_loss,
            final_loss: *losses.last().unwrap(),
            stopped_early: outcome.stopped_early,
            duration_s: t0.elapsed().as_secs_f64(),
        });
        columns.push((tag, losses));
    }
    let loss_dat = cfg.output_dir.join("loss.dat");
    emit_dat(&DatTable::Loss { columns: &columns }, &loss_dat)?;
    let manifest = cfg.output_dir.join("manifest_train.json");
    write_json(
        &manifest,
        &json!({
            "command": "train",
            "version": env!("CARGO_PKG_VERSION"),
            "config_file": config_path,
            "seed": cfg.seed,
            "config": cfg,
            "runs": runs,
            "outputs": { "loss_table": loss_dat },
            "duration_s": started.elapsed().as_secs_f64(),
        }),
    )?;
    Ok(TrainOutcomeSummary {
        runs,
        loss_dat,
        manifest,
    })
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Models to evaluate; the checkpoints written by `train` when empty.
    pub checkpoints: Vec<PathBuf>,
    /// Adds a plain 16-QAM reference column tagged `qam`.
    pub include_plain_qam: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub tags: Vec<String>,
    pub results: Vec<SweepResult>,
    pub files: Vec<PathBuf>,
}

fn load_checked(path: &Path, n: usize) -> Result<AeModel, CliError> {
    let model = load_model(path).map_err(|e| match e {
        coofdm_ae::Error::Io { .. } => CliError::Core(e),
        other => CliError::Runtime(format!("{}: {other}", path.display())),
    })?;
    if model.block_len() != n {
        return Err(CliError::Runtime(format!(
            "{}: checkpoint block length {} does not match train.fft_size = {n}",
            path.display(),
            model.block_len()
        )));
    }
    Ok(model)
}

/// Runs the configured BER sweep for each model and writes
/// `BER_<tag>.dat`, `sweep_<tag>.json`, `lw.dat` and `manifest_sweep.json`.
pub fn cmd_sweep(
    cfg: &RunConfig,
    config_path: Option<&Path>,
    opts: &SweepOptions,
) -> Result<SweepOutcome, CliError> {
    let n = cfg.train.fft_size;
    let paths: Vec<PathBuf> = if opts.checkpoints.is_empty() {
        train_tags(cfg).iter().map(|t| checkpoint_path(cfg, t)).collect()
    } else {
        opts.checkpoints.clone()
    };
    let models = paths
        .iter()
        .map(|p| load_checked(p, n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut labels: Vec<String> = models
        .iter()
        .map(|m| linewidth_label(m.metadata.linewidth_hz))
        .collect();
    if opts.include_plain_qam {
        labels.push("qam".into());
    }
    let tags = unique_tags(labels);
    ensure_dir(&cfg.output_dir)?;

    let started = Instant::now();
    let mut results = Vec::new();
    let mut files = Vec::new();
    for (k, tag) in tags.iter().enumerate() {
        let scheme = models.get(k).map_or(Scheme::PlainQam, Scheme::Autoencoder);
        let result = ber_osnr_sweep(scheme, n, &cfg.sweep_spec(tag)?)?;
        let dat = cfg.output_dir.join(format!("BER_{tag}.dat"));
        emit_dat(&DatTable::Ber(&result), &dat)?;
        let json_path = cfg.output_dir.join(format!("sweep_{tag}.json"));
        write_result_json(&result, &json_path)?;
        files.extend([dat, json_path]);
        results.push(result);
    }
    let columns: Vec<(String, Vec<Option<f64>>)> = tags
        .iter()
        .cloned()
        .zip(results.iter().map(|r| r.required_osnr_db.clone()))
        .collect();
    let lw = cfg.output_dir.join("lw.dat");
    let linewidths = &results[0].spec.linewidths_hz;
    emit_dat(
        &DatTable::Lw {
            linewidths_hz: linewidths,
            columns: &columns,
        },
        &lw,
    )?;
    files.push(lw);
    write_json(
        &cfg.output_dir.join("manifest_sweep.json"),
        &json!({
            "command": "sweep",
            "version": env!("CARGO_PKG_VERSION"),
            "config_file": config_path,
            "seed": cfg.seed,
            "config": cfg,
            "checkpoints": paths,
            "tags": tags,
            "outputs": files,
            "duration_s": started.elapsed().as_secs_f64(),
        }),
    )?;
    Ok(SweepOutcome { tags, results, files })
}
