//! Runs the `coae` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 3
output_dir = "out"

[train]
fft_size = 16
linewidths_hz = [10e3]
batch_size = 64
steps_per_epoch = 4
max_epochs = 3

[sweep]
linewidths_hz = [10e3, 100e3]
osnr_db = [14.0, 20.0]
max_bits = 10_000
"#;

fn coae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coae"))
        .args(args)
        .output()
        .expect("run coae")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn train_then_sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");

    let o = coae(&["train", "--config", &config, "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("model_10k.coae").is_file());
    assert!(out.join("manifest_train.json").is_file());
    let loss = std::fs::read_to_string(out.join("loss.dat")).unwrap();
    assert!(loss.starts_with("e 10k"), "{loss}");
    assert_eq!(loss.lines().count(), 4);

    let o = coae(&["sweep", "--config", &config, "--plain-qam"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in [
        "BER_10k.dat",
        "BER_qam.dat",
        "lw.dat",
        "sweep_10k.json",
        "manifest_sweep.json",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let lw = std::fs::read_to_string(out.join("lw.dat")).unwrap();
    assert!(lw.starts_with("lw 10k qam"), "{lw}");
}

#[test]
fn missing_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SMALL.replace("fft_size = 16\n", ""));
    let o = coae(&["train", "--config", &config]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("fft_size"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &SMALL.replace("max_epochs = 3", "max_epochs = 3\nepochs = 9"),
    );
    let o = coae(&["train", "--config", &config]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("epochs"), "{}", stderr(&o));
}

#[test]
fn corrupt_checkpoint_names_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let bad = dir.path().join("broken.coae");
    std::fs::write(&bad, b"COAE but not really a checkpoint").unwrap();
    let o = coae(&[
        "sweep",
        "--config",
        &config,
        "--checkpoint",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.coae"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(coae(&["train"]).status.code(), Some(2));
    assert_eq!(coae(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let o = coae(&["verify", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["suites"].as_array().unwrap().len(), 4);

    let o = coae(&["verify", "--inject-fault", "broken-gradient"]);
    assert_eq!(o.status.code(), Some(4));
}
