use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_porestokes"))
}

fn fixture(ext: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../core/fixtures/model-problem.{ext}"))
}

fn fixture_mesh(cmd: &mut Command) -> &mut Command {
    cmd.arg("--geometry")
        .arg(fixture("json"))
        .arg("--mesh-nodes")
        .arg(fixture("node"))
        .arg("--mesh-eles")
        .arg(fixture("ele"))
        .arg("--mesh-edges")
        .arg(fixture("edge"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// `quantity,value` rows of a norms.csv file.
fn norm(path: &Path, quantity: &str) -> f64 {
    let mut r = csv::Reader::from_path(path).unwrap();
    for row in r.records() {
        let row = row.unwrap();
        if &row[0] == quantity {
            return row[1].parse().unwrap();
        }
    }
    panic!("{quantity} missing from {}", path.display());
}

const CHANNEL: &str = r#"{"domain":[0,0,2,1],"solids":[],"p_in":1,"p_out":0,"nu":1}"#;

#[test]
fn empty_channel_matches_poiseuille() {
    let tmp = TempDir::new().unwrap();
    let geo = write(tmp.path(), "channel.json", CHANNEL);
    let out = tmp.path().join("out");
    let o = bin()
        .args(["solve-fem", "--structured-h", "0.25", "--geometry"])
        .arg(&geo)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("fields.vtk").is_file());
    let norms = out.join("norms.csv");
    assert!(norm(&norms, "poiseuille_relative_error") < 1e-10);
    let (q_in, q_out) = (norm(&norms, "inflow"), norm(&norms, "outflow"));
    assert!((q_in - q_out).abs() < 1e-10 * q_in.abs());
    // Plane Poiseuille: q = H^3 (p_in - p_out) / (12 nu L).
    assert!((q_out - 1.0 / 24.0).abs() < 1e-10);
}

#[test]
fn missing_geometry_file_is_input_error() {
    let tmp = TempDir::new().unwrap();
    let o = bin()
        .args(["solve-fem", "--structured-h", "0.25", "--geometry"])
        .arg(tmp.path().join("nope.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn malformed_geometry_is_input_error() {
    let tmp = TempDir::new().unwrap();
    let geo = write(tmp.path(), "bad.json", r#"{"domain":[0,0,1]}"#);
    let o = bin()
        .args(["solve-cpnm", "--geometry"])
        .arg(&geo)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn two_mesh_sources_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = fixture_mesh(&mut bin().arg("solve-fem"))
        .args(["--structured-h", "0.1", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_input_error() {
    let o = bin().args(["solve-fem", "--no-such-flag"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn fixture_ddpnm_against_reference() {
    let tmp = TempDir::new().unwrap();
    for eps in ["0", "0.2"] {
        let out = tmp.path().join(eps);
        let o = fixture_mesh(&mut bin().args(["solve-ddpnm", "--reference", "--perturb", eps]))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let err = norm(&out.join("norms.csv"), "relative");
        assert!(err <= 1e-2, "eps {eps}: relative error {err}");
        for f in ["report.json", "tractions.csv", "fluxes.csv", "fields.vtk"] {
            assert!(out.join(f).is_file(), "{f} missing");
        }
    }
}

#[test]
fn symmetric_series_network_splits_pressure() {
    let tmp = TempDir::new().unwrap();
    let geo = write(
        tmp.path(),
        "series.json",
        r#"{"domain":[0,0,3,1],"solids":[{"disk":[1,0,0.3]},{"disk":[1,1,0.3]},{"disk":[2,0,0.3]},{"disk":[2,1,0.3]}],"p_in":1,"p_out":0,"nu":1}"#,
    );
    let o = bin()
        .args(["solve-cpnm", "--geometry"])
        .arg(&geo)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut r = csv::Reader::from_path(tmp.path().join("pressures.csv")).unwrap();
    let p: Vec<f64> = r.records().map(|row| row.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(p.len(), 3);
    assert!((p[1] - 0.5).abs() < 1e-12, "{p:?}");
    for f in ["pores.csv", "throats.csv", "fluxes.csv"] {
        assert!(tmp.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn blocked_channel_is_input_error() {
    let tmp = TempDir::new().unwrap();
    let geo = write(
        tmp.path(),
        "blocked.json",
        r#"{"domain":[0,0,3,1],"solids":[{"rect":[1,0,0.5,1]},{"disk":[2.3,0.3,0.15]}],"p_in":1,"p_out":0,"nu":1}"#,
    );
    let o = bin()
        .args(["solve-cpnm", "--geometry"])
        .arg(&geo)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("block"), "{}", stderr(&o));
}

#[test]
fn calibrate_from_report() {
    let tmp = TempDir::new().unwrap();
    let dd = tmp.path().join("dd");
    let o = fixture_mesh(&mut bin().arg("solve-ddpnm")).arg("--out").arg(&dd).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let cal = tmp.path().join("cal");
    let o = bin()
        .arg("calibrate")
        .arg("--from-report")
        .arg(dd.join("report.json"))
        .arg("--out")
        .arg(&cal)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(cal.join("calibration.json")).unwrap()).unwrap();
    let rho = summary["comparison"]["rank_correlation"].as_f64().expect("rank_correlation");
    assert!(rho >= 0.95, "rank correlation {rho}");
    assert!(cal.join("comparison.csv").is_file());
    assert!(cal.join("npnm/throats.csv").is_file());
}

#[test]
fn calibrate_missing_report_is_input_error() {
    let tmp = TempDir::new().unwrap();
    let o = bin()
        .arg("calibrate")
        .arg("--from-report")
        .arg(tmp.path().join("report.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn flags_override_config_file() {
    let tmp = TempDir::new().unwrap();
    let geo = write(tmp.path(), "channel.json", CHANNEL);
    let out = tmp.path().join("out");
    let config = serde_json::json!({
        "geometry": geo,
        "structured-h": 0.5,
        "out": tmp.path().join("ignored"),
    });
    let cfg = write(tmp.path(), "run.json", &config.to_string());
    let o = bin()
        .arg("solve-fem")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("norms.csv").is_file());
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn unknown_config_key_is_input_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "run.json", r#"{"strucured-h": 0.5}"#);
    let o = bin().arg("solve-fem").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}
