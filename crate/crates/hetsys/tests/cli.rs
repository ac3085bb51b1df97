use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hetsys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetsys"))
        .args(args)
        .output()
        .expect("failed to launch hetsys")
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is not JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_hopf_passes() {
    let out = hetsys(&["check", "--model", "hopf", "--w", "1", "--a", "1", "--system", "twisted-hs"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["pass"], true);
    for (_, v) in r["residuals"].as_object().unwrap() {
        assert!(v.as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn functional_csv_has_sqrt_profile() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = hetsys(&[
        "functional", "--model", "hopf", "--a", "1", "--x", "1", "--t", "0.1:10:100", "--csv",
        path_str(&csv_path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["t", "M", "dM", "d2M", "residual"]);
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    let k = rows[0][1] / rows[0][0].sqrt();
    for row in &rows {
        assert!((row[1] / row[0].sqrt() - k).abs() <= 1e-12 * k);
    }
    assert!((k - 2.0).abs() < 1e-12);
}

#[test]
fn symbol_scan_passes() {
    let out = hetsys(&["symbol", "--model", "torus4", "--trials", "200", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["scan"]["trials"], 200);
    assert_eq!(r["scan"]["failures"], 0);
}

#[test]
fn exit_codes() {
    let failed = hetsys(&["check", "--model", "hopf", "--w", "1+0.5i"]);
    assert_eq!(failed.status.code(), Some(1));
    assert_eq!(report(&failed)["pass"], false);
    assert_eq!(hetsys(&["check", "--model", "klein"]).status.code(), Some(2));
    assert_eq!(hetsys(&["check", "--system", "nope"]).status.code(), Some(2));
    assert_eq!(hetsys(&["functional", "--model", "h3", "--t", "1:2:3"]).status.code(), Some(2));
    assert_eq!(hetsys(&["check", "--t", "1:x:3"]).status.code(), Some(2));
    // an engine precondition failure still reports JSON
    let engine = hetsys(&["path", "--model", "h3"]);
    assert_eq!(engine.status.code(), Some(1));
    assert_eq!(report(&engine)["pass"], false);
    assert!(report(&engine)["error"].is_string());
}

#[test]
fn csv_needs_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    assert_eq!(hetsys(&["check", "--csv", path_str(&p)]).status.code(), Some(2));
}

#[test]
fn json_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let out = hetsys(&["cohomology", "--model", "hopf", "--json", path_str(&p)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&p).unwrap(), out.stdout);
    let r = report(&out);
    assert_eq!(r["aeppli"][1][1], 1);
}

#[test]
fn file_model_and_bundle() {
    let out = hetsys(&["check", "--model", &data("hopf.model")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["model"], "hopf");

    let out = hetsys(&["check", "--model", &data("torus4.model"), "--system", "hs", "--bundle", &data("su2_flat.bundle")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let out = hetsys(&["check", "--model", &data("h3_skewed.model"), "--system", "hs"]);
    assert_eq!(out.status.code(), Some(1));

    // catalog parameters do not apply to file models
    assert_eq!(hetsys(&["check", "--model", &data("hopf.model"), "--a", "2"]).status.code(), Some(2));
    assert_eq!(hetsys(&["check", "--model", "/no/such/file.model"]).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let runs: [&[&str]; 3] = [
        &["variation", "--model", "hopf", "--trials", "5", "--seed", "3"],
        &["symbol", "--model", "torus6", "--trials", "30", "--seed", "9"],
        &["functional", "--t", "0.5:4:7"],
    ];
    for args in runs {
        let a = hetsys(args);
        let b = hetsys(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
    let a = hetsys(&["symbol", "--model", "torus4", "--trials", "10", "--seed", "1"]);
    let b = hetsys(&["symbol", "--model", "torus4", "--trials", "10", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}
