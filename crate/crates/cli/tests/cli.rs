use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn spinport(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinport")).args(args).env_remove("SPINPORT_SEED").output().unwrap()
}

fn cesium() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cesium.toml").display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep.json");
    let o = spinport(&["run", "--builtin", "atom_to_light", "--r", "1.0", "--engine", "analytic", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(rep["schema"], "spinport-report/1");
    assert!((rep["fidelity_coherent"].as_f64().unwrap() - 0.88080).abs() < 1e-5);
}

#[test]
fn swap_in_the_ideal_limit() {
    let o = spinport(&["run", "--builtin", "swap", "--r", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    let g = rep["gain_matrix"].as_array().unwrap();
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            let expected = if i == j { -1.0 } else { 0.0 };
            assert!((v.as_f64().unwrap() - expected).abs() < 1e-8);
        }
    }
}

#[test]
fn monte_carlo_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.qp");
    std::fs::write(&script, "mode a vacuum\nmode b vacuum\nsqueeze a b r=1.0\nmeasure x a -> m1\ndisplace b x gain=-1.0 from=m1\n").unwrap();
    let o = spinport(&["run", "--script", script.to_str().unwrap(), "--engine", "monte_carlo", "--shots", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SEED_REQUIRED"));

    let o = Command::new(env!("CARGO_BIN_EXE_spinport"))
        .args(["run", "--script", script.to_str().unwrap(), "--engine", "monte_carlo", "--shots", "1000"])
        .env("SPINPORT_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["engine"]["seed"], 5);
}

#[test]
fn script_diagnostics_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("bad.qp");
    std::fs::write(&script, "mode a vacuum\nqnd a c k=1\n").unwrap();
    let o = spinport(&["run", "--script", script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("2:7: UNDECLARED_MODE"), "{}", stderr(&o));

    let missing = dir.path().join("missing.qp");
    assert_eq!(spinport(&["run", "--script", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(spinport(&["run", "--builtin", "teleport"]).status.code(), Some(2));
}

#[test]
fn script_inputs_and_variables() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("phase.qp");
    std::fs::write(&script, "mode a vacuum\nphase a theta=$t\n").unwrap();
    let o = spinport(&["run", "--script", script.to_str().unwrap(), "--var", "t=3.141592653589793", "--input", "1,-2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    let mean = &rep["output_moments"][0]["mean"];
    assert!((mean[0].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!((mean[1].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn sweep_rows() {
    let o = spinport(&["sweep", "--builtin", "atom_to_light", "--grid", "0:2:0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["r", "added_noise_x", "added_noise_p", "fidelity_coherent", "engine", "shots", "seed"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let fid: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    // Readout noise at ratio 10^6 shifts the classical point by ~6e-8.
    assert!((fid[0] - 0.5).abs() < 1e-6);
    assert!(fid.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_rejects_bad_grid() {
    let o = spinport(&["sweep", "--builtin", "atom_to_light", "--grid", "2:0:0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("BAD_GRID"));
}

#[test]
fn sweep_is_schedule_independent() {
    let args = ["sweep", "--builtin", "atom_to_atom", "--grid", "0:1:0.25", "--engine", "monte_carlo", "--shots", "2000", "--seed", "3"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_spinport")).args(args).env("RAYON_NUM_THREADS", threads).output().unwrap().stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
}

#[test]
fn feasibility_report() {
    let o = spinport(&["feasibility", &cesium()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["n_required"], 800_000);
    let check = rep["checks"].as_array().unwrap().iter().find(|c| c["name"] == "gamma_over_delta").unwrap();
    assert_eq!(check["status"], "pass");
    assert!((check["value"].as_f64().unwrap() - 0.00625).abs() < 1e-15);
}

#[test]
fn feasibility_names_missing_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    let text: String = std::fs::read_to_string(cesium()).unwrap().lines().filter(|l| !l.starts_with("gamma")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, text).unwrap();
    let o = spinport(&["feasibility", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma"));
}

#[test]
fn validate_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("oracle.json");
    let o = spinport(&["validate", "--oracle-json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let tables: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(tables.as_array().unwrap().len(), 36);
}

#[test]
fn validate_reports_residual_noise() {
    let o = spinport(&["validate", "--builtin", "atom_to_atom", "--ratio", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("residual_noise"));
    assert!(text.contains("5.000000e-3"));
}

#[test]
fn validate_catches_injected_gain_error() {
    let o = spinport(&["validate", "--builtin", "atom_to_light", "--inject-gain-error", "1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("discrepancies") && text.contains("MISMATCH"));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["run", "--builtin", "atom_to_atom", "--r", "1", "--engine", "monte_carlo", "--shots", "5000", "--seed", "17"];
    let a = spinport(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, spinport(&args).stdout);
}
