//! End-to-end tests of the command-line interface: exit codes, file
//! outputs, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oamforge::state::OamAmplitudeTable;

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oamforge"));
    cmd.env("OAMFORGE_THREADS", "2");
    cmd
}

fn repo_file(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(relative)
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn spectrum_gaussian_pump_peaks_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectrum.json");
    let output = binary()
        .args(["spectrum", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--pump")
        .arg(repo_file("pumps/gaussian.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(stdout(&output).contains("captured probability"));

    let table = OamAmplitudeTable::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // Single anti-diagonal with the peak on the fundamental pair.
    for (a, b) in table.keys() {
        assert_eq!(a + b, 0);
    }
    let peak = table
        .iter()
        .max_by(|x, y| x.1.norm_sqr().partial_cmp(&y.1.norm_sqr()).unwrap())
        .map(|(&key, _)| key)
        .unwrap();
    assert_eq!(peak, (0, 0));
}

#[test]
fn spectrum_pump_superposition_spans_three_diagonals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectrum.csv");
    let output = binary()
        .args(["spectrum", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--pump")
        .arg(repo_file("pumps/vortex_triplet.json"))
        .arg("--out")
        .arg(&out)
        .args(["--format", "csv"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let table = OamAmplitudeTable::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let mut diagonals: Vec<i32> = table.keys().map(|(a, b)| a + b).collect();
    diagonals.sort_unstable();
    diagonals.dedup();
    assert_eq!(diagonals, vec![-2, 0, 2]);
}

#[test]
fn spectrum_rejects_empty_pump() {
    let dir = tempfile::tempdir().unwrap();
    let pump = dir.path().join("pump.json");
    std::fs::write(&pump, "[]").unwrap();
    let output = binary()
        .args(["spectrum", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--pump")
        .arg(&pump)
        .arg("--out")
        .arg(dir.path().join("out.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn byte_identical_outputs_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut payloads = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let output = binary()
            .args(["compile", "--config"])
            .arg(repo_file("configs/default.json"))
            .arg("--plan")
            .arg(repo_file("plans/mes3_shift.json"))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(output.status.success());
        payloads.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn compile_reports_fidelities() {
    let dir = tempfile::tempdir().unwrap();
    let output = binary()
        .args(["compile", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--plan")
        .arg(repo_file("plans/mes3_shift.json"))
        .arg("--target")
        .arg(repo_file("targets/mes3_sym.json"))
        .args(["--subspace", "-2,0,2"])
        .arg("--out")
        .arg(dir.path().join("state.json"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    let fidelity: f64 = text
        .lines()
        .find_map(|line| line.strip_prefix("fidelity: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((fidelity - 0.984).abs() < 0.01, "fidelity {fidelity}");
    assert!(text.contains("subspace fidelity"));
}

#[test]
fn compile_malformed_plan_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(&plan, "{ not json").unwrap();
    let output = binary()
        .args(["compile", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--plan")
        .arg(&plan)
        .arg("--out")
        .arg(dir.path().join("state.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn compile_destructive_interference_is_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(
        &plan,
        r#"{"stages":[
            {"type":"crystal","pump":[{"l":0,"re":1.0,"im":0.0}],"power":1.0},
            {"type":"phase","phiA":3.141592653589793,"phiB":0.0},
            {"type":"crystal","pump":[{"l":0,"re":1.0,"im":0.0}],"power":1.0}
        ]}"#,
    )
    .unwrap();
    let output = binary()
        .args(["compile", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--plan")
        .arg(&plan)
        .arg("--out")
        .arg(dir.path().join("state.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn missing_config_is_io_failure() {
    let output = binary()
        .args(["compile", "--config", "/nonexistent/config.json", "--plan"])
        .arg(repo_file("plans/mes3_shift.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn untagged_units_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"crystal": {"length": 10.0,
                        "k_pump_per_um": 28.0, "k_signal_per_um": 14.0,
                        "k_idler_per_um": 14.0, "periodic_poling": true},
            "waists": {"pump": {"value": 15.0, "unit": "um"},
                       "signal": {"value": 25.0, "unit": "um"},
                       "idler": {"value": 25.0, "unit": "um"}}}"#,
    )
    .unwrap();
    let output = binary()
        .args(["spectrum", "--config"])
        .arg(&config)
        .arg("--pump")
        .arg(repo_file("pumps/gaussian.json"))
        .arg("--out")
        .arg(dir.path().join("out.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn scan_writes_sorted_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let output = binary()
        .args(["scan", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--plan")
        .arg(repo_file("plans/ququart_collinear.json"))
        .arg("--target")
        .arg(repo_file("targets/ququart_collinear.json"))
        .arg("--out")
        .arg(&out)
        .args(["--format", "csv", "--window", "8"])
        .args(["--wp-min", "10", "--wp-max", "30", "--wp-steps", "3"])
        .args(["--wc-min", "10", "--wc-max", "30", "--wc-steps", "3"])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("w_p_um,w_c_um,fidelity"));
    let rows: Vec<(f64, f64)> = lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            (fields[0].parse().unwrap(), fields[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 9);
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(rows, sorted);
}

#[test]
fn coherence_failure_names_the_inequality() {
    let output = binary()
        .args(["coherence", "--geometry"])
        .arg(repo_file("geometry/pump_mismatch.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stdout(&output).contains("pump-path indistinguishability"));
    let passing = binary()
        .args(["coherence", "--geometry"])
        .arg(repo_file("geometry/balanced.json"))
        .output()
        .unwrap();
    assert!(passing.status.success());
}

#[test]
fn verify_ratios_reports_tiny_deviation() {
    let output = binary()
        .args(["verify-ratios", "--config"])
        .arg(repo_file("configs/default.json"))
        .args(["--ell-pump", "4"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    let value: f64 = text.split(": ").last().unwrap().trim().parse().unwrap();
    assert!(value < 1e-9, "deviation {value}");

    // The mirrored diagonal obeys the same law through the conjugation path.
    let mirrored = binary()
        .args(["verify-ratios", "--config"])
        .arg(repo_file("configs/default.json"))
        .args(["--ell-pump", "-3"])
        .output()
        .unwrap();
    assert!(mirrored.status.success());
    let text = stdout(&mirrored);
    let value: f64 = text.split(": ").last().unwrap().trim().parse().unwrap();
    assert!(value < 1e-9, "mirrored deviation {value}");
}

#[test]
fn equivalence_matches_to_tolerance() {
    let output = binary()
        .args(["equivalence", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--plan")
        .arg(repo_file("plans/mes3_pump.json"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    let value: f64 = text.split(": ").last().unwrap().trim().parse().unwrap();
    assert!(value < 1e-9, "discrepancy {value}");

    // Plans with genuine shifts have no single-pump reduction.
    let shifted = binary()
        .args(["equivalence", "--config"])
        .arg(repo_file("configs/default.json"))
        .arg("--plan")
        .arg(repo_file("plans/mes3_shift.json"))
        .output()
        .unwrap();
    assert_eq!(shifted.status.code(), Some(1));
}
