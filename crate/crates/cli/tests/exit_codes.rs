//! Exit-code contract: 0 success, 1 runtime failure, 2 schema violation.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clmf"))
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"seed\": 1, \"unknown\": true}").unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("nowhere.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn valid_minimal_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(
        &path,
        serde_json::json!({
            "seed": 5,
            "generator": {"family": "uniform"},
            "scaling": {"n_values": [8], "regime": "critical", "lambda": 1.0},
            "initial": {"kind": "chaotic", "family": {"kind": "uniform"}},
            "k_max": 1,
            "radius": 2,
            "t_grid": [0.5],
            "reports": ["evolve"]
        })
        .to_string(),
    )
    .unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn stationary_subcommand_emits_nu_value() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["stationary", "--k-max", "2", "--m2", "1", "--radii", "16,8"])
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("nu_k1.json")).unwrap())
            .unwrap();
    let row = value["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|row| row[0].as_f64() == Some(1.0))
        .unwrap();
    assert!((row[1].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}
