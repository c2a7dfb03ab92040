//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when a
//! gating criterion fails. The full-scale reproduction only runs with
//! `COAE_FULL_SCALE=1` and never gates.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use coofdm_ae::autoencoder::{save_model, AeModel};
use coofdm_ae::channel::{gen_phase_path, snr_to_osnr_db, ChannelConfig, PhaseNoiseConfig};
use coofdm_ae::experiments::{measure_ber, required_osnr, CurvePoint, Scheme, StopRule, SweepResult};
use coofdm_ae::rng;
use coofdm_ae_cli::verify::{fft_suite, gradient_suite};
use coofdm_ae_cli::{cmd_sweep, cmd_train, Fault, RunConfig, SweepOptions};

const SEED: u64 = 20_240_611;

struct Outcome {
    id: &'static str,
    gating: bool,
    status: Status,
    summary: String,
}

enum Status {
    Pass,
    Fail,
    NotRun,
}

impl Outcome {
    fn check(id: &'static str, passed: bool, summary: String) -> Self {
        Self {
            id,
            gating: true,
            status: if passed { Status::Pass } else { Status::Fail },
            summary,
        }
    }
}

fn report(o: &Outcome, elapsed: f64) {
    let tag = match o.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::NotRun => "NOT RUN",
    };
    let gate = if o.gating { "" } else { " (non-gating)" };
    println!("{tag:7} [{}]{gate} {} ({elapsed:.1} s)", o.id, o.summary);
}

fn gradient() -> Outcome {
    let s = gradient_suite(Fault::None);
    Outcome::check(
        "1 gradient",
        s.measured < 1e-4,
        format!("max relative error {:.3e} < 1e-4; {}", s.measured, s.detail),
    )
}

fn phase_statistics() -> Outcome {
    let expected = 1.9635e-2;
    let cfg = PhaseNoiseConfig::new(100e3, 1.0 / 32e9).unwrap();
    let mut r = rng::stream(SEED, 2);
    let paths = 20_000;
    let ends: Vec<f64> = (0..paths)
        .map(|_| {
            let p = gen_phase_path(&cfg, 1001, &mut r);
            p[1000] - p[0]
        })
        .collect();
    let mean = ends.iter().sum::<f64>() / paths as f64;
    let var = ends.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (paths - 1) as f64;
    let dev = (var / expected - 1.0).abs();
    Outcome::check(
        "2 phase-noise statistics",
        dev < 0.05,
        format!(
            "variance {var:.5e} rad^2 vs 1.9635e-2, deviation {:.2}% < 5%",
            100.0 * dev
        ),
    )
}

fn signal_layer() -> Outcome {
    let s = fft_suite();
    Outcome::check(
        "3 signal layer",
        s.passed,
        format!(
            "max round-trip/Parseval error {:.3e} < 1e-12; {}",
            s.measured, s.detail
        ),
    )
}

fn qam_calibration() -> Outcome {
    let base = ChannelConfig::phase_only(0.0);
    let osnr = snr_to_osnr_db(10.0, base.symbol_rate_hz, base.reference_bandwidth_hz);
    let stop = StopRule {
        target_errors: u64::MAX,
        min_bits: 1_048_576,
        max_bits: 1_048_576,
        blocks_per_batch: 64,
    };
    let count = measure_ber(
        Scheme::PlainQam,
        64,
        &base.with_osnr(Some(osnr)),
        &stop,
        &mut rng::stream(SEED, 4),
    )
    .unwrap();
    let dev = (count.ber / 5.9e-2 - 1.0).abs();
    Outcome::check(
        "4 QAM/OSNR calibration",
        dev < 0.1 && count.bits >= 1_000_000,
        format!(
            "BER {:.4e} over {} bits at Es/N0 10 dB vs 5.9e-2, deviation {:.2}% < 10%",
            count.ber,
            count.bits,
            100.0 * dev
        ),
    )
}

fn desk_config(out: &Path) -> RunConfig {
    let text = format!(
        r#"
seed = {SEED}
output_dir = "{}"

[train]
fft_size = 64
linewidths_hz = [10e3]
batch_size = 1024
steps_per_epoch = 20
max_epochs = 300

[sweep]
linewidths_hz = [10e3, 100e3]
osnr_db = [10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0]
target_errors = 200
max_bits = 1_000_000
"#,
        out.display()
    );
    RunConfig::parse(&text).unwrap()
}

fn convergence(cfg: &RunConfig) -> (Outcome, Option<PathBuf>) {
    let mut crossed = None;
    let trained = cmd_train(cfg, None, |_, r| {
        if crossed.is_none() && r.loss < 5e-3 {
            crossed = Some(r.epoch);
        }
    });
    let run = match trained {
        Ok(mut s) => s.runs.remove(0),
        Err(e) => {
            return (
                Outcome::check("5 desk-scale convergence", false, format!("training failed: {e}")),
                None,
            )
        }
    };
    let improvement = run.first_loss / run.best_loss;
    let passed = crossed.is_some() && improvement >= 10.0;
    let summary = format!(
        "N=64, 10 kHz: epoch-1 loss {:.3e}, best {:.3e} at epoch {} of {}; below 5e-3 at epoch {}; improvement {:.0}x >= 10x",
        run.first_loss,
        run.best_loss,
        run.best_epoch,
        run.epochs_run,
        crossed.map_or("never".into(), |e| e.to_string()),
        improvement
    );
    (
        Outcome::check("5 desk-scale convergence", passed, summary),
        Some(run.checkpoint),
    )
}

fn min_ber(result: &SweepResult, i: usize) -> f64 {
    result.points[i]
        .iter()
        .map(|p| p.count.ber)
        .fold(f64::INFINITY, f64::min)
}

fn mitigation(cfg: &RunConfig, trained: &Path) -> Outcome {
    let untrained = cfg.output_dir.join("untrained.coae");
    let model = AeModel::new(cfg.train.fft_size, &mut rng::stream(SEED, rng::STREAM_INIT)).unwrap();
    save_model(&model, &untrained).unwrap();
    let opts = SweepOptions {
        checkpoints: vec![trained.to_path_buf(), untrained],
        include_plain_qam: false,
    };
    let out = match cmd_sweep(cfg, None, &opts) {
        Ok(o) => o,
        Err(e) => return Outcome::check("6 desk-scale mitigation", false, format!("sweep failed: {e}")),
    };
    let (ae, rand) = (&out.results[0], &out.results[1]);
    let thr = 3.8e-3;
    let mut parts = Vec::new();
    let mut passed = true;
    for (i, lw) in ae.spec.linewidths_hz.iter().enumerate() {
        let (best_ae, best_rand) = (min_ber(ae, i), min_ber(rand, i));
        passed &= best_ae < thr && best_rand > thr;
        parts.push(format!(
            "{} kHz: trained min BER {best_ae:.2e} (required OSNR {}), untrained min BER {best_rand:.2e}",
            lw / 1e3,
            ae.required_osnr_db[i].map_or("n/a".into(), |v| format!("{v:.2} dB"))
        ));
    }
    Outcome::check(
        "6 desk-scale mitigation",
        passed,
        format!("threshold 3.8e-3 over 10-30 dB; {}", parts.join("; ")),
    )
}

fn small_config(out: &Path) -> RunConfig {
    let text = format!(
        r#"
seed = 7
output_dir = "{}"

[train]
fft_size = 16
linewidths_hz = [10e3, 100e3]
batch_size = 64
steps_per_epoch = 10
max_epochs = 6

[sweep]
linewidths_hz = [10e3, 1e6]
osnr_db = [12.0, 18.0, 24.0]
max_bits = 40_000
"#,
        out.display()
    );
    RunConfig::parse(&text).unwrap()
}

fn run_small(out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let cfg = small_config(out);
    cmd_train(&cfg, None, |_, _| {}).map_err(|e| e.to_string())?;
    cmd_sweep(
        &cfg,
        None,
        &SweepOptions {
            checkpoints: vec![],
            include_plain_qam: true,
        },
    )
    .map_err(|e| e.to_string())?;
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|name| name.ends_with(".dat") || name.ends_with(".coae"))
        .map(|name| {
            let bytes = std::fs::read(out.join(&name)).unwrap_or_default();
            (name, bytes)
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism(root: &Path) -> Outcome {
    let runs: Result<Vec<_>, _> = ["a", "b"].iter().map(|d| run_small(&root.join(d))).collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return Outcome::check("7 determinism", false, e),
    };
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    let expected = ["BER_10k.dat", "BER_100k.dat", "BER_qam.dat", "loss.dat", "lw.dat"];
    let complete = expected.iter().all(|e| names.contains(e));
    let differing: Vec<&str> = runs[0]
        .iter()
        .zip(&runs[1])
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let same_set = runs[0].len() == runs[1].len();
    Outcome::check(
        "7 determinism",
        complete && same_set && differing.is_empty(),
        format!(
            "two identical train+sweep runs; {} files compared ({}); differing: {}",
            names.len(),
            names.join(", "),
            if differing.is_empty() {
                "none".into()
            } else {
                differing.join(", ")
            }
        ),
    )
}

fn hand_case() -> Outcome {
    let curve = [
        CurvePoint {
            osnr_db: 10.0,
            ber: 1e-2,
            bits: 1_000_000,
        },
        CurvePoint {
            osnr_db: 12.0,
            ber: 1e-3,
            bits: 1_000_000,
        },
    ];
    let got = required_osnr(&curve, 3.8e-3).unwrap();
    let passed = got.is_some_and(|v| (v - 10.84).abs() <= 0.01);
    Outcome::check(
        "8 required_osnr hand case",
        passed,
        format!(
            "{} vs 10.84 ± 0.01 dB",
            got.map_or("none".into(), |v| format!("{v:.4} dB"))
        ),
    )
}

fn full_scale(root: &Path) -> Outcome {
    let id = "9 full-scale reproduction";
    if std::env::var("COAE_FULL_SCALE").map_or(true, |v| v != "1") {
        return Outcome {
            id,
            gating: false,
            status: Status::NotRun,
            summary:
                "set COAE_FULL_SCALE=1 to train N=1024 models and sweep the full grid (days on one core)"
                    .into(),
        };
    }
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let mut cfg = RunConfig::load(&config).unwrap();
    cfg.output_dir = root.join("full");
    let mut outcome = full_scale_checks(&cfg, &config);
    outcome.gating = false;
    outcome
}

fn full_scale_checks(cfg: &RunConfig, config: &Path) -> Outcome {
    let id = "9 full-scale reproduction";
    let trained = match cmd_train(cfg, Some(config), |_, _| {}) {
        Ok(t) => t,
        Err(e) => return Outcome::check(id, false, format!("training failed: {e}")),
    };
    let swept = match cmd_sweep(cfg, Some(config), &SweepOptions::default()) {
        Ok(s) => s,
        Err(e) => return Outcome::check(id, false, format!("sweep failed: {e}")),
    };
    // (a) loss of order 1e-3 within about 24 epochs, allowing 3x on both.
    let loss_ok = trained
        .runs
        .iter()
        .all(|r| r.best_loss <= 3e-3 && r.best_epoch <= 72);
    let lws = &swept.results[0].spec.linewidths_hz;
    let idx = |hz: f64| lws.iter().position(|&v| (v - hz).abs() < 1.0);
    let thr = swept.results[0].spec.fec_threshold;
    let mut structure_ok = true;
    for r in &swept.results {
        let reached: Vec<f64> = r.required_osnr_db.iter().flatten().copied().collect();
        structure_ok &= reached.windows(2).all(|w| w[0] <= w[1] + 0.25);
        for (i, &lw) in lws.iter().enumerate() {
            if lw <= 2e6 {
                structure_ok &= r.required_osnr_db[i].is_some();
            }
        }
        if let Some(i) = idx(3e6) {
            structure_ok &= min_ber(r, i) > thr;
        }
    }
    let at_1m = idx(1e6).map(|i| {
        (
            swept.results[0].required_osnr_db[i],
            swept.results[1].required_osnr_db[i],
        )
    });
    let ordering_ok = matches!(at_1m, Some((Some(a), Some(b))) if a <= b + 0.25);
    Outcome::check(
        id,
        loss_ok && structure_ok && ordering_ok,
        format!(
            "best losses {:?}; required OSNR {:?}",
            trained
                .runs
                .iter()
                .map(|r| (r.best_loss, r.best_epoch))
                .collect::<Vec<_>>(),
            swept
                .results
                .iter()
                .map(|r| &r.required_osnr_db)
                .collect::<Vec<_>>()
        ),
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let desk = desk_config(&tmp.path().join("desk"));
    let mut outcomes = Vec::new();
    let mut run = |f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(&o, t.elapsed().as_secs_f64());
        outcomes.push(o);
    };
    run(&mut gradient);
    run(&mut phase_statistics);
    run(&mut signal_layer);
    run(&mut qam_calibration);
    let mut checkpoint = None;
    run(&mut || {
        let (o, c) = convergence(&desk);
        checkpoint = c;
        o
    });
    run(&mut || match &checkpoint {
        Some(c) => mitigation(&desk, c),
        None => Outcome::check("6 desk-scale mitigation", false, "no trained checkpoint".into()),
    });
    run(&mut || determinism(&tmp.path().join("det")));
    run(&mut hand_case);
    run(&mut || full_scale(tmp.path()));

    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| o.gating && matches!(o.status, Status::Fail))
        .map(|o| o.id)
        .collect();
    if failed.is_empty() {
        println!("acceptance: all gating criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
