use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coofdm_ae_cli::{cmd_sweep, cmd_train, exit, run_verify, CliError, Fault, RunConfig, SweepOptions};

/// Autoencoder phase-noise mitigation for CO-OFDM: training, BER sweeps and
/// self-verification.
#[derive(Parser)]
#[command(name = "coae", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one autoencoder per configured linewidth.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Measure BER over the configured linewidth × OSNR grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Model to evaluate; repeatable. Defaults to the checkpoints written by `train`.
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// Also sweep plain 16-QAM without the autoencoder (column `qam`).
        #[arg(long)]
        plain_qam: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the gradient, FFT, phase-statistics and QAM-baseline suites.
    Verify {
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    BrokenGradient,
}

fn load(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            quiet,
        } => {
            let cfg = load(&config, seed, out)?;
            let summary = cmd_train(&cfg, Some(&config), |tag, r| {
                if !quiet {
                    eprintln!(
                        "[{tag}] epoch {:4}  loss {:.6e}  lr {:e}",
                        r.epoch, r.loss, r.learning_rate
                    );
                }
            })?;
            for run in &summary.runs {
                println!(
                    "{}: best loss {:.4e} at epoch {} of {} -> {}",
                    run.tag,
                    run.best_loss,
                    run.best_epoch,
                    run.epochs_run,
                    run.checkpoint.display()
                );
            }
            println!("loss table: {}", summary.loss_dat.display());
            Ok(exit::OK)
        }
        Command::Sweep {
            config,
            checkpoints,
            plain_qam,
            seed,
            out,
        } => {
            let cfg = load(&config, seed, out)?;
            let opts = SweepOptions {
                checkpoints,
                include_plain_qam: plain_qam,
            };
            let outcome = cmd_sweep(&cfg, Some(&config), &opts)?;
            for (tag, result) in outcome.tags.iter().zip(&outcome.results) {
                let req: Vec<String> = result
                    .required_osnr_db
                    .iter()
                    .map(|v| v.map_or("not reached".into(), |v| format!("{v:.2} dB")))
                    .collect();
                println!("{tag}: required OSNR per linewidth: {}", req.join(", "));
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(exit::OK)
        }
        Command::Verify { report, inject_fault } => {
            let fault = match inject_fault {
                Some(FaultArg::BrokenGradient) => Fault::BrokenGradient,
                None => Fault::None,
            };
            let result = run_verify(fault);
            let text = serde_json::to_string_pretty(&result).map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{text}");
            if let Some(path) = report {
                std::fs::write(&path, text + "\n")
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            }
            Ok(if result.passed {
                exit::OK
            } else {
                exit::VERIFY_FAILED
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
