use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_eitangle");

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "error").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn subcommand_for(name: &str) -> Option<&'static str> {
    let prefix = name.split('_').next()?;
    Some(match prefix {
        "reproduce" => "reproduce",
        "sweep" => "sweep",
        "coeffs" => "coeffs",
        "validate" => "validate",
        "dump" => "dump-state",
        _ => return None,
    })
}

fn shipped_scenarios() -> Vec<(String, &'static str, PathBuf)> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if !name.ends_with(".json") || name.ends_with(".expected.json") {
            continue;
        }
        let stem = name.trim_end_matches(".json").to_string();
        if let Some(cmd) = subcommand_for(&stem) {
            out.push((stem, cmd, path));
        }
    }
    out.sort();
    out
}

#[test]
fn reproduce_two_state() {
    let o = run(&["reproduce", "--scenario", "two_state_27", "--alpha", "2", "--beta", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let fidelity: f64 = rows[0][5].parse().unwrap();
    let concurrence: f64 = rows[0][6].parse().unwrap();
    assert!(fidelity >= 1.0 - 1e-10);
    let closed = (1.0 - (-16.0f64).exp()).sqrt() * (1.0 - (-16.0f64).exp()).sqrt();
    assert!((concurrence - closed).abs() < 1e-12);
    assert_eq!(rows[0][7], "closed_form");
}

#[test]
fn reproduce_vacuum_ys() {
    let o = run(&["reproduce", "--scenario", "ys_31", "--alpha", "0", "--beta", "0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["concurrence"].as_f64(), Some(0.0));
}

#[test]
fn reproduce_at_wrong_time_fails_the_gate() {
    let o = run(&["reproduce", "--scenario", "two_state_27", "--alpha", "1.5", "--beta", "1.5", "--tau", "pi/3"]);
    assert_eq!(o.status.code(), Some(2));
    let rows = csv_rows(&stdout(&o));
    assert!(rows[0][5].parse::<f64>().unwrap() < 1.0 - 1e-6);
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let o = run(&["reproduce", "--scenario", "five_state"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("two_state_27"));
}

#[test]
fn usage_errors() {
    for args in [
        vec!["reproduce"],
        vec!["frobnicate"],
        vec!["reproduce", "--scenario", "odd_cat", "--beta", "0"],
        vec!["reproduce", "--scenario", "ys_31", "--alpha", "1+"],
        vec!["coeffs", "--m", "2", "--n", "4"],
        vec!["coeffs", "--m", "1", "--n", "4", "--k", "0"],
        vec!["coeffs", "--m", "1", "--n", "4", "--k", "1.5"],
        vec!["coeffs", "--m", "0", "--n", "4"],
        vec!["sweep", "--alpha", "1:2"],
        vec!["dump-state", "--tau", "tau"],
        vec!["validate", "--lambda1", "0"],
        vec!["reproduce", "--config", "/nonexistent/config.json"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(64), "{args:?}");
    }
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn unwritable_output() {
    let o = run(&["sweep", "--alpha", "1", "--beta", "1", "--out", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(73));
    let o = run(&["validate", "--g1", "0", "--samples", "2", "--summary", "/nonexistent-dir/s.json"]);
    assert_eq!(o.status.code(), Some(73));
}

#[test]
fn sweep_single_point() {
    let o = run(&["sweep", "--alpha", "1", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let closed: f64 = rows[0][2].parse().unwrap();
    assert!((closed - 0.98168).abs() < 1e-5);
    assert!((closed - (1.0 - (-4.0f64).exp())).abs() < 1e-15);
}

#[test]
fn sweep_grid_shape_and_agreement() {
    let o = run(&["sweep", "--alpha", "0.25:2:4", "--beta", "0.5,1,1.5"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 12);
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str()), ("0.25", "0.5"));
    assert_eq!((rows[1][0].as_str(), rows[1][1].as_str()), ("0.25", "1"));
    for r in &rows {
        let closed: f64 = r[2].parse().unwrap();
        let schmidt: f64 = r[3].parse().unwrap();
        assert!((closed - schmidt).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn coefficient_tables() {
    let o = run(&["coeffs", "--m", "1", "--n", "4", "--k", "-1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 16);
    let nonzero: Vec<(String, String, f64, f64)> = rows
        .iter()
        .map(|r| (r[0].clone(), r[1].clone(), r[2].parse().unwrap(), r[3].parse().unwrap()))
        .filter(|(_, _, re, im): &(String, String, f64, f64)| re.abs() > 1e-12 || im.abs() > 1e-12)
        .collect();
    assert_eq!(nonzero.len(), 4);
    for r in &rows {
        assert!(r[4].parse::<f64>().unwrap() < 1e-12);
    }
    let o = run(&["coeffs", "--n", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 9);
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn decoupled_validation_has_unit_fidelity() {
    let o = run(&["validate", "--g1", "0", "--samples", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
    for r in rows {
        let f: f64 = r[1].parse().unwrap();
        assert!((f - 1.0).abs() < 1e-12, "{r:?}");
        assert_eq!((r[2].as_str(), r[3].as_str()), ("0", "0"));
    }
}

#[test]
fn off_resonance_needs_the_flag() {
    let o = run(&["validate", "--delta1", "50", "--delta2", "49", "--samples", "2"]);
    assert_eq!(o.status.code(), Some(65));
    let o = run(&["validate", "--delta1", "50", "--delta2", "49", "--samples", "2", "--allow-off-resonance"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["validate", "--g1", "2", "--samples", "2"]);
    assert_eq!(o.status.code(), Some(65));
}

#[test]
fn validation_regression_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let cfg = scenarios_dir().join("validate_regression.json");
    let o = run(&["validate", "--config", cfg.to_str().unwrap(), "--summary", summary.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let got: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    let want: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(scenarios_dir().join("validate_regression.expected.json")).unwrap(),
    )
    .unwrap();
    for key in [
        "k",
        "min_fidelity",
        "final_infidelity",
        "max_leak_n2",
        "max_leak_n3",
        "max_leakage",
        "fitted_linear",
        "fitted_cross_kerr",
        "predicted_linear",
        "predicted_cross_kerr",
    ] {
        let (g, w) = (got[key].as_f64().unwrap(), want[key].as_f64().unwrap());
        assert!((g - w).abs() < 1e-6, "{key}: {g} vs {w}");
    }
    assert!(got["max_norm_drift"].as_f64().unwrap() < 1e-8);
    assert!(got["max_charge_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn config_values_yield_to_flags() {
    let cfg = scenarios_dir().join("reproduce_two_state_27_large.json");
    let o = run(&["reproduce", "--config", cfg.to_str().unwrap(), "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!((rows[0][1].as_str(), rows[0][2].as_str()), ("0.5", "2"));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("coeffs.csv");
    let a = run(&["coeffs", "--n", "8"]);
    let b = run(&["coeffs", "--n", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(b.status.code(), Some(0));
    assert!(b.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn dump_state_round_trips() {
    let o = run(&["dump-state", "--alpha", "1", "--beta", "0.5", "--tau", "pi/2", "--cutoff", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let s = eitangle::fockspace::TwoModeState::read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!((s.photon_cutoff(), s.atom_cutoff()), (20, 20));
    assert!((s.norm() - 1.0).abs() < 1e-10);
    let o = run(&["dump-state", "--scenario", "even_cat", "--beta", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["cutoff"].as_u64().is_some());
}

#[test]
fn shipped_scenarios_are_deterministic() {
    let all = shipped_scenarios();
    assert!(all.len() >= 15);
    for (name, cmd, path) in all {
        let first = run(&[cmd, "--config", path.to_str().unwrap(), "--jobs", "4"]);
        let second = run(&[cmd, "--config", path.to_str().unwrap(), "--jobs", "1"]);
        assert_eq!(first.status.code(), Some(0), "{name}");
        assert_eq!(first.stdout, second.stdout, "{name}");
        assert!(!first.stdout.is_empty(), "{name}");
    }
}
