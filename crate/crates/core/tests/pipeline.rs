//! Cross-module checks: modem, channel, autoencoder, checkpoints and the
//! sweep driver working together through the public API.

use coofdm_ae::autoencoder::{load_model, save_model, train_autoencoder, AeModel, TrainConfig};
use coofdm_ae::channel::{channel_forward, ChannelConfig, InitialPhase};
use coofdm_ae::experiments::{ber_osnr_sweep, render_dat, DatTable, Scheme, SweepResult, SweepSpec};
use coofdm_ae::modem::{count_bit_errors, demap_16qam, gen_random_bits, map_16qam};
use coofdm_ae::nn::Mode;
use coofdm_ae::rng;
use coofdm_ae::signal::ComplexBlock;
use coofdm_ae::Error;
use proptest::prelude::*;

fn qam_blocks(blocks: usize, n: usize, seed: u64) -> (coofdm_ae::modem::BitBlock, Vec<ComplexBlock>) {
    let bits = gen_random_bits(4 * n * blocks, &mut rng::stream(seed, 9)).unwrap();
    let symbols = map_16qam(&bits);
    let blocks = symbols
        .chunks_exact(n)
        .map(|c| ComplexBlock::new(c.to_vec()).unwrap())
        .collect();
    (bits, blocks)
}

#[test]
fn clean_link_is_error_free() {
    let (bits, tx) = qam_blocks(8, 32, 1);
    let (rx, _) = channel_forward(&ChannelConfig::phase_only(0.0), &tx, &mut rng::stream(1, 10)).unwrap();
    let rx_bits = demap_16qam(&rx.iter().flat_map(|b| b.samples().to_vec()).collect::<Vec<_>>());
    assert_eq!(count_bit_errors(&bits, &rx_bits).unwrap().0, 0);
}

#[test]
fn constant_phase_is_a_common_rotation() {
    let (_, tx) = qam_blocks(4, 16, 2);
    let mut cfg = ChannelConfig::phase_only(0.0);
    cfg.initial_phase = InitialPhase::Uniform;
    let (rx, realization) = channel_forward(&cfg, &tx, &mut rng::stream(2, 10)).unwrap();
    for ((t, r), theta) in tx.iter().zip(&rx).zip(realization.theta()) {
        let rot = num_complex::Complex64::from_polar(1.0, theta[0]);
        for (a, b) in t.samples().iter().zip(r.samples()) {
            assert!((a * rot - b).norm() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn phase_noise_preserves_block_energy(seed in any::<u64>(), lw in 0.0f64..5e6, log_n in 2u32..7) {
        let n = 1usize << log_n;
        let (_, tx) = qam_blocks(3, n, seed);
        let (rx, _) = channel_forward(&ChannelConfig::phase_only(lw), &tx, &mut rng::stream(seed, 10)).unwrap();
        for (t, r) in tx.iter().zip(&rx) {
            prop_assert!((t.energy() - r.energy()).abs() < 1e-9 * t.energy());
        }
    }
}

#[test]
fn trained_model_survives_a_checkpoint_round_trip() {
    let mut cfg = TrainConfig::new(8, 10e3, 4);
    cfg.max_epochs = 3;
    cfg.steps_per_epoch = 5;
    cfg.batch_size = 32;
    let outcome = train_autoencoder(&cfg, |_| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.coae");
    save_model(&outcome.model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, outcome.model);
    assert_eq!(back.metadata.seed, 4);
    assert_eq!(back.metadata.linewidth_hz, 10e3);

    let (_, tx) = qam_blocks(16, 8, 5);
    let a = outcome
        .model
        .decode(
            &outcome.model.encode(&tx, Mode::Inference).unwrap(),
            Mode::Inference,
        )
        .unwrap();
    let b = back
        .decode(&back.encode(&tx, Mode::Inference).unwrap(), Mode::Inference)
        .unwrap();
    assert_eq!(a, b);

    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_model(&path), Err(Error::CorruptCheckpoint(_))));
    std::fs::write(&path, &bytes[..mid]).unwrap();
    assert!(matches!(load_model(&path), Err(Error::CorruptCheckpoint(_))));
}

fn plain_sweep(seed: u64) -> SweepResult {
    let mut spec = SweepSpec::new("qam", vec![0.0, 50e6], vec![8.0, 12.0, 16.0, 20.0], seed);
    spec.stop.min_bits = 64;
    spec.stop.max_bits = 200_000;
    ber_osnr_sweep(Scheme::PlainQam, 16, &spec).unwrap()
}

#[test]
fn plain_qam_sweep_is_reproducible_and_ordered() {
    let a = plain_sweep(3);
    assert_eq!(a, plain_sweep(3));
    assert_ne!(a, plain_sweep(4));
    let clean = a.curve(0);
    assert!(clean.windows(2).all(|w| w[1].ber <= w[0].ber), "{clean:?}");
    // Without mitigation a 50 MHz linewidth is much worse than none at 20 dB.
    assert!(a.points[1][3].count.ber > 10.0 * a.points[0][3].count.ber.max(1e-6));
    assert!(a.required_osnr_db[0].is_some());

    let table = render_dat(&DatTable::Ber(&a)).unwrap();
    assert_eq!(table.lines().count(), 1 + a.spec.osnr_db.len());
    let json = serde_json::to_string(&a).unwrap();
    let back: SweepResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a);
}

#[test]
fn untrained_model_sweeps_without_error() {
    let model = AeModel::new(16, &mut rng::stream(6, rng::STREAM_INIT)).unwrap();
    let mut spec = SweepSpec::new("ae", vec![10e3], vec![14.0, 28.0], 6);
    spec.stop.min_bits = 64;
    spec.stop.max_bits = 20_000;
    let r = ber_osnr_sweep(Scheme::Autoencoder(&model), 16, &spec).unwrap();
    assert!(r.points[0]
        .iter()
        .all(|p| p.count.bits >= 20_000 || p.count.errors >= 100));
    assert!(ber_osnr_sweep(Scheme::Autoencoder(&model), 32, &spec).is_err());
}
