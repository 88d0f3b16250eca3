//! End-to-end tests of the command-line interface: output formats, exit
//! codes, and byte stability of sweeps.

use std::path::Path;
use std::process::{Command, Output};

fn photoiso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photoiso"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).expect("fixture written");
}

#[test]
fn bounds_json_spot_values() {
    let out = photoiso(&["bounds", "--delta", "1", "--w", "3", "--q", "0.5", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json output");
    let star = v["gamma_star"].as_f64().unwrap();
    assert!((star - 0.659046).abs() < 1e-5);
    let markov = v["gamma_markov"].as_f64().unwrap();
    assert!((markov - 0.558840).abs() < 1e-5);
    assert!(v["gamma_embed"].is_null());
}

#[test]
fn bounds_full_excitation_infinite_w() {
    let out = photoiso(&["bounds", "--delta", "1", "--w", "inf", "--q", "1", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json output");
    assert_eq!(v["gamma_star"].as_f64().unwrap(), 1.0);
    assert_eq!(v["w"].as_str().unwrap(), "inf");
    assert!(v["gamma_embed"].as_f64().is_some());
}

#[test]
fn bounds_rejects_invalid_parameters() {
    let out = photoiso(&["bounds", "--delta", "1", "--w", "3", "--q", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    // w below delta is equally invalid
    let out = photoiso(&["bounds", "--delta", "2", "--w", "1", "--q", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_row_count_and_byte_stability() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = photoiso(&[
            "sweep",
            "--delta-min",
            "0.5",
            "--delta-max",
            "2.5",
            "--steps",
            "3",
            "--q-list",
            "0.2,0.8",
            "--w",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let text_a = std::fs::read(&a).unwrap();
    let text_b = std::fs::read(&b).unwrap();
    assert_eq!(text_a, text_b, "identical flags give identical bytes");

    let text = String::from_utf8(text_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "delta,q,w,gamma_star,gamma_markov,gamma_embed,gamma_th");
    assert_eq!(lines.len(), 1 + 3 * 2);
    // finite w leaves the gamma_embed column empty but present
    for row in &lines[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 7);
        assert!(cells[5].is_empty());
        assert!(!cells[3].is_empty());
    }
    // delta-major ordering, q in list order
    let first: Vec<&str> = lines[1].split(',').collect();
    let second: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(first[0], second[0]);
    assert_eq!(first[1], "0.2");
    assert_eq!(second[1], "0.8");
}

#[test]
fn sweep_rejects_embed_for_finite_w() {
    let dir = tempfile::tempdir().unwrap();
    let out = photoiso(&[
        "sweep",
        "--delta-min",
        "0.5",
        "--delta-max",
        "1.5",
        "--steps",
        "2",
        "--q-list",
        "0.5",
        "--w",
        "3",
        "--outputs",
        "gamma-star,gamma-embed",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_unwritable_path_is_io_error() {
    let out = photoiso(&[
        "sweep",
        "--delta-min",
        "0.5",
        "--delta-max",
        "1.5",
        "--steps",
        "2",
        "--q-list",
        "0.5",
        "--w",
        "3",
        "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_embeddable_identity_and_violator() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id.json");
    write(
        &id,
        r#"{"energies": [0, 1, 3], "matrix": [[1,0,0],[0,1,0],[0,0,1]]}"#,
    );
    let out = photoiso(&["check-embeddable", id.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // positive spectrum but a vanishing off-diagonal entry
    let violator = dir.path().join("violator.json");
    let ed = (-1.0f64).exp();
    write(
        &violator,
        &format!(
            r#"{{"energies": [0, 1, "inf"], "matrix": [[{}, 0.5, 0.0], [{}, 0.5, 0.5], [0, 0, 0.5]]}}"#,
            1.0 - 0.5 * ed,
            0.5 * ed
        ),
    );
    let out = photoiso(&["check-embeddable", violator.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("NOT_EMBEDDABLE"));
    assert!(text.contains("spectral bound"));
}

#[test]
fn check_embeddable_complete_thermalization() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ct.json");
    let (ed, ew) = ((-1.0f64).exp(), (-3.0f64).exp());
    let z = 1.0 + ed + ew;
    let col = [1.0 / z, ed / z, ew / z];
    write(
        &path,
        &serde_json::json!({
            "energies": [0, 1, 3],
            "matrix": [
                [col[0], col[0], col[0]],
                [col[1], col[1], col[1]],
                [col[2], col[2], col[2]],
            ]
        })
        .to_string(),
    );
    let out = photoiso(&["check-embeddable", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("zero eigenvalue"));
}

#[test]
fn check_embeddable_malformed_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    write(&path, r#"{"energies": [0, 1, 3]}"#);
    let out = photoiso(&["check-embeddable", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    // a stochastic matrix that does not fix the Gibbs state is also malformed
    write(
        &path,
        r#"{"energies": [0, 1, 3], "matrix": [[0,1,0],[1,0,0],[0,0,1]]}"#,
    );
    let out = photoiso(&["check-embeddable", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    // missing file is an I/O failure, not a parse failure
    let out = photoiso(&["check-embeddable", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_ctm_reaches_self_and_gibbs() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.json");
    let init = dir.path().join("init.json");
    let gibbs = dir.path().join("gibbs.json");
    write(&sys, r#"{"energies": [0, 1, 3]}"#);
    write(&init, r#"{"probs": [0.5, 0, 0.5]}"#);
    let (ed, ew) = ((-1.0f64).exp(), (-3.0f64).exp());
    let z = 1.0 + ed + ew;
    write(
        &gibbs,
        &serde_json::json!({ "probs": [1.0 / z, ed / z, ew / z] }).to_string(),
    );

    let out = photoiso(&[
        "check-ctm",
        "--system",
        sys.to_str().unwrap(),
        "--initial",
        init.to_str().unwrap(),
        "--target",
        init.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["reachable"], serde_json::json!(true));
    assert_eq!(v["witness"].as_array().unwrap().len(), 0);

    let out = photoiso(&[
        "check-ctm",
        "--system",
        sys.to_str().unwrap(),
        "--initial",
        init.to_str().unwrap(),
        "--target",
        gibbs.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["witness"].as_array().unwrap().len() >= 2);
    assert!(v["witness"][0]["pair"].is_array());
    assert!(v["witness"][0]["lambda"].is_number());
}

#[test]
fn check_ctm_optimal_yield_is_out_of_reach() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.json");
    let init = dir.path().join("init.json");
    let target = dir.path().join("target.json");
    write(&sys, r#"{"energies": [0, 1, 3]}"#);
    write(&init, r#"{"probs": [0.5, 0, 0.5]}"#);
    // a state carrying the unrestricted optimal yield 0.659046...
    write(&target, r#"{"probs": [0.3409538135982109, 0.6590461864017891, 0]}"#);
    let out = photoiso(&[
        "check-ctm",
        "--system",
        sys.to_str().unwrap(),
        "--initial",
        init.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--mode",
        "yield",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("not found at resolution"));
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let out = photoiso(&["verify", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_curves_suite_passes() {
    let out = photoiso(&["verify", "curves"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[PASS]"));
    assert!(text.contains("tol"));
}
