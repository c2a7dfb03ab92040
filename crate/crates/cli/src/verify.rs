//! Self-checks run by `coae verify`: gradients, FFT, phase-noise statistics
//! and the plain 16-QAM AWGN baseline.

use coofdm_ae::autoencoder::{ae_forward_backward, training_loss, AeModel};
use coofdm_ae::channel::{gen_phase_path, snr_to_osnr_db, Channel, ChannelConfig, PhaseNoiseConfig};
use coofdm_ae::experiments::{measure_ber, Scheme, StopRule};
use coofdm_ae::modem::{gen_random_bits, map_16qam, qam16_ber_approx};
use coofdm_ae::nn::gradcheck::gradient_check;
use coofdm_ae::nn::RealBatch;
use coofdm_ae::rng;
use coofdm_ae::signal::{c2r, r2c, FftPlan};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Scales the analytic gradient of the first parameter tensor by 1.01.
    BrokenGradient,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    /// The quantity compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

const SEED: u64 = 0x5eed;

fn suite_rng(k: u64) -> rng::SimRng {
    rng::stream(SEED, rng::STREAM_VERIFY + k)
}

/// End-to-end gradient at N = 8 with a fixed phase path and no AWGN,
/// against central differences. Pass: max relative error < 1e-4.
pub fn gradient_suite(fault: Fault) -> SuiteReport {
    let n = 8;
    let mut r = suite_rng(0);
    let model = AeModel::new(n, &mut r).expect("valid block length");
    let bits = gen_random_bits(4 * n * n, &mut r).expect("whole symbols");
    let rows: Vec<f64> = map_16qam(&bits).chunks_exact(n).flat_map(c2r).collect();
    let x = RealBatch::new(n, 2 * n, rows).expect("finite symbols");
    // A wide linewidth makes the fixed rotation far from identity.
    let channel = Channel::new(ChannelConfig::phase_only(100e6), n).expect("valid channel");
    let (_, grads, realization) = ae_forward_backward(&model, &x, &channel, &mut r).expect("forward pass");
    let mut analytic = grads.concat();
    if fault == Fault::BrokenGradient {
        for g in analytic.iter_mut().take(grads[0].len()) {
            *g *= 1.01;
        }
    }
    let report = gradient_check(
        "end-to-end",
        &model.flat_params(),
        &analytic,
        |p| {
            let mut m = model.clone();
            m.set_flat_params(p).expect("same layout");
            training_loss(&m, &x, &channel, &realization).expect("loss")
        },
        1e-4,
    );
    SuiteReport {
        name: "gradient".into(),
        passed: report.passed(),
        measured: report.max_relative_error,
        tolerance: report.tolerance,
        detail: format!(
            "{} parameters ({} re-probed with a finer step); worst index {} (analytic {:e}, numeric {:e})",
            report.checked,
            report.reprobed,
            report.worst_index,
            report.analytic_at_worst,
            report.numeric_at_worst
        ),
    }
}

/// Unitary FFT round trip and Parseval for N in {4, 64, 1024}, plus an exact
/// real/complex packing round trip. Pass: max error < 1e-12.
pub fn fft_suite() -> SuiteReport {
    let mut r = suite_rng(1);
    let mut worst: f64 = 0.0;
    let mut packing_exact = true;
    for n in [4usize, 64, 1024] {
        let plan = FftPlan::new(n).expect("power of two");
        for _ in 0..8 {
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
                .collect();
            let mut y = x.clone();
            plan.forward_in_place(&mut y).expect("length");
            let energy = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
            worst = worst.max((energy(&x) - energy(&y)).abs() / energy(&x));
            plan.inverse_in_place(&mut y).expect("length");
            worst = worst.max(x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
            packing_exact &= r2c(&c2r(&x)).is_ok_and(|back| back == x);
        }
    }
    SuiteReport {
        name: "fft".into(),
        passed: worst < 1e-12 && packing_exact,
        measured: worst,
        tolerance: 1e-12,
        detail: format!(
            "round trip and Parseval over N = 4, 64, 1024; packing round trip exact: {packing_exact}"
        ),
    }
}

/// Variance of θ_1000 − θ_0 over 20 000 paths at 100 kHz and 32 GBd against
/// 1000·2π·Δν·T_s. Pass: relative deviation < 5%.
pub fn phase_suite() -> SuiteReport {
    let (lw, ts, steps, paths) = (100e3, 1.0 / 32e9, 1000usize, 20_000usize);
    let cfg = PhaseNoiseConfig::new(lw, ts).expect("valid phase noise");
    let expected = steps as f64 * 2.0 * std::f64::consts::PI * lw * ts;
    let mut r = suite_rng(2);
    let ends: Vec<f64> = (0..paths)
        .map(|_| {
            let p = gen_phase_path(&cfg, steps + 1, &mut r);
            p[steps] - p[0]
        })
        .collect();
    let mean = ends.iter().sum::<f64>() / paths as f64;
    let var = ends.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (paths - 1) as f64;
    let rel = (var / expected - 1.0).abs();
    SuiteReport {
        name: "phase".into(),
        passed: rel < 0.05,
        measured: rel,
        tolerance: 0.05,
        detail: format!("sample variance {var:.6e} rad^2, expected {expected:.6e}"),
    }
}

/// Plain Gray 16-QAM through the calibrated AWGN channel at Es/N0 = 10 dB
/// over at least 1e6 bits. Pass: within 10% of the analytic approximation.
pub fn qam_suite() -> SuiteReport {
    let es_n0_db = 10.0;
    let base = ChannelConfig::phase_only(0.0);
    let osnr = snr_to_osnr_db(es_n0_db, base.symbol_rate_hz, base.reference_bandwidth_hz);
    let stop = StopRule {
        target_errors: u64::MAX,
        min_bits: 1_000_000,
        max_bits: 1_000_000,
        blocks_per_batch: 64,
    };
    let expected = qam16_ber_approx(es_n0_db);
    let count = measure_ber(
        Scheme::PlainQam,
        64,
        &base.with_osnr(Some(osnr)),
        &stop,
        &mut suite_rng(3),
    )
    .expect("plain QAM measurement");
    let rel = (count.ber / expected - 1.0).abs();
    SuiteReport {
        name: "qam".into(),
        passed: rel < 0.1,
        measured: rel,
        tolerance: 0.1,
        detail: format!(
            "BER {:.4e} over {} bits at OSNR {osnr:.3} dB (Es/N0 {es_n0_db} dB); approximation {expected:.4e}",
            count.ber, count.bits
        ),
    }
}

pub fn run_verify(fault: Fault) -> VerifyReport {
    let suites = vec![gradient_suite(fault), fft_suite(), phase_suite(), qam_suite()];
    VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}
