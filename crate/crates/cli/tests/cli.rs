use std::process::{Command, Output};

use pluri_core::flower::{planar_flower, FlowerRecord};
use serde_json::Value;

fn pluri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pluri"))
        .args(args)
        .env_remove("PLURI_SEED")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn consistency_example_run_passes() {
    let out = pluri(&[
        "verify",
        "octahedron-consistency",
        "--family",
        "cross-ratio",
        "--trials",
        "100",
        "--seed",
        "42",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"][0]["trials_passed"], 100);
    assert_eq!(r["config"]["seed"], 42);
}

#[test]
fn builtin_corpus_decomposes() {
    let out = pluri(&["verify", "flower-decompose", "--corpus", "builtin"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["summary"]["trials_failed"], 0);
}

#[test]
fn mixed_trapezoidal_consistency_example() {
    let out = pluri(&[
        "verify",
        "quad-consistency",
        "--system",
        "mixed_trapezoidal",
        "--trials",
        "100",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reports_are_byte_identical() {
    let args = [
        "verify",
        "tetrahedron-property",
        "--trials",
        "20",
        "--seed",
        "3",
    ];
    let a = pluri(&args);
    let b = pluri(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let args = ["verify", "three-leg", "--trials", "10"];
    let to_file = Command::new(env!("CARGO_BIN_EXE_pluri"))
        .args(args)
        .args(["--output", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), pluri(&args).stdout);
}

#[test]
fn seed_falls_back_to_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_pluri"))
        .args(["verify", "flip", "--trials", "5"])
        .env("PLURI_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(report(&out)["config"]["seed"], 99);
}

#[test]
fn negative_control_exits_one() {
    let out = pluri(&[
        "verify",
        "octahedron-consistency",
        "--family",
        "broken",
        "--trials",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    for t in r["results"][0]["report"]["trials"].as_array().unwrap() {
        assert!(t["rank"].as_u64().unwrap() > 2);
    }
}

#[test]
fn configuration_errors_exit_two() {
    for args in [
        &["verify", "quad-consistency", "--system", "nope"][..],
        &["verify", "el-sum", "--family", "nope"],
        &["verify", "closedness", "--trials", "0"],
        &["verify", "no-such-suite"],
        &[
            "verify",
            "flower-decompose",
            "--corpus",
            "/definitely/missing.json",
        ],
    ] {
        let out = pluri(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn tolerance_override_can_fail_a_suite() {
    let out = pluri(&[
        "verify",
        "tetrahedron-property",
        "--system",
        "cross_ratio_all",
        "--trials",
        "10",
        "--tolerance",
        "0",
    ]);
    let r = report(&out);
    assert_eq!(r["config"]["tolerance"], 0.0);
    assert_eq!(r["results"][0]["report"]["tolerance"], 0.0);
    let failed = r["summary"]["trials_failed"].as_u64().unwrap();
    assert_eq!(out.status.code(), Some(if failed > 0 { 1 } else { 0 }));
}

#[test]
fn flower_corpus_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flowers.json");
    let records = vec![FlowerRecord::from_flower(
        Some("hexagon".into()),
        &planar_flower(),
    )];
    std::fs::write(&path, serde_json::to_string(&records).unwrap()).unwrap();
    let p = path.to_str().unwrap();
    let out = pluri(&["verify", "flower-decompose", "--corpus", p]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"][0]["trials_passed"], 1);
    let out = pluri(&["verify", "el-sum", "--corpus", p]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn invalid_flower_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    // one lone triangle has no interior vertex
    std::fs::write(
        &path,
        r#"[{"center":[0,0,0],"triangles":[{"kind":"black_triangle","base":[-1,0,0],"dirs":[0,1,2],"sign":1}]}]"#,
    )
    .unwrap();
    let out = pluri(&[
        "verify",
        "flower-decompose",
        "--corpus",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_matches_printed_octahedron_formula() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.json");
    std::fs::write(
        &path,
        r#"{"0,1,1,0": 0.3, "1,0,1,0": -0.2, "1,1,0,0": 0.55, "0,1,0,1": 0.9, "1,0,0,1": -0.7, "0,0,1,1": 0.1}"#,
    )
    .unwrap();
    let out = pluri(&[
        "eval",
        "--family",
        "cross-ratio",
        "--field",
        path.to_str().unwrap(),
        "--alpha",
        "0=1,1=1.5,2=0.7,3=1.9",
        "--cell",
        r#"{"kind":"octahedron","base":[0,0,0,0],"dirs":[0,1,2,3],"sign":1}"#,
        "--center",
        "1,1,0,0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    // (α0−α2)/(x01−x12) − (α0−α3)/(x01−x13) − (α1−α2)/(x01−x02) + (α1−α3)/(x01−x03)
    let want = 0.3 / 0.25 - (-0.9) / -0.35 - 0.8 / 0.75 + (-0.4) / 1.25;
    assert!((v["corner_residual"].as_f64().unwrap() - want).abs() < 1e-12);
}
