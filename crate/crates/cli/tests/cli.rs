use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn synthnull(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthnull"))
        .arg("--out")
        .arg(out)
        .arg("--no-timestamp")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(out: &Path, command: &str) -> Value {
    let text = fs::read_to_string(out.join(format!("{command}_report.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generated_cone_validates() {
    let dir = TempDir::new().unwrap();
    let cone = dir.path().join("cone.json");
    let g = synthnull(
        dir.path(),
        &[
            "generate",
            "--output",
            path_arg(&cone),
            "cone",
            "--n",
            "4",
            "--horizon",
            "10",
        ],
    );
    assert_eq!(code(&g), 0);
    let v = synthnull(dir.path(), &["validate", "--input", path_arg(&cone)]);
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stderr));
    let rep = report(dir.path(), "validate");
    assert_eq!(rep["verdict"], "pass");
    assert_eq!(rep["exit_code"], 0);
    assert!(rep.get("timestamp_unix").is_none());
    assert!(dir.path().join("validate_summary.txt").exists());
}

#[test]
fn validate_flags_bad_weights() {
    let dir = TempDir::new().unwrap();
    let cone = dir.path().join("cone.json");
    synthnull(
        dir.path(),
        &[
            "generate",
            "--output",
            path_arg(&cone),
            "cone",
            "--rays",
            "4",
        ],
    );
    let text = fs::read_to_string(&cone)
        .unwrap()
        .replace("\"weight\": 0.25", "\"weight\": 0.5");
    fs::write(&cone, text).unwrap();
    let v = synthnull(dir.path(), &["validate", "--input", path_arg(&cone)]);
    assert_eq!(code(&v), 1);
    let rep = report(dir.path(), "validate");
    assert_eq!(rep["details"]["pass"], false);
    assert!(rep["details"]["issues"]
        .as_array()
        .unwrap()
        .iter()
        .any(|i| i["ray"].is_null()));
}

#[test]
fn penrose_on_ingoing_sphere_is_tight() {
    let dir = TempDir::new().unwrap();
    let sphere = dir.path().join("ingoing_sphere.json");
    let g = synthnull(
        dir.path(),
        &[
            "generate",
            "--output",
            path_arg(&sphere),
            "sphere",
            "--radius",
            "2",
        ],
    );
    assert_eq!(code(&g), 0);
    let p = synthnull(
        dir.path(),
        &["penrose", "--input", path_arg(&sphere), "--N", "4"],
    );
    assert_eq!(code(&p), 0);
    let rep = report(dir.path(), "penrose");
    let check = &rep["details"]["check"];
    assert_eq!(check["bound"].as_f64().unwrap(), 2.0);
    assert_eq!(check["max_b"].as_f64().unwrap(), 2.0);
    assert!(check["min_slack"].as_f64().unwrap().abs() <= 1e-6);
    assert_eq!(rep["config"]["penrose_tolerance"].as_f64().unwrap(), 1e-9);
}

#[test]
fn nce_on_bump_dumps_witness() {
    let dir = TempDir::new().unwrap();
    let bump = dir.path().join("bump.json");
    synthnull(
        dir.path(),
        &["generate", "--output", path_arg(&bump), "bump", "--N", "3"],
    );
    let o = synthnull(
        dir.path(),
        &[
            "nce",
            "--input",
            path_arg(&bump),
            "--N",
            "3",
            "--trials",
            "10000",
            "--seed",
            "7",
        ],
    );
    assert_eq!(code(&o), 1);
    for f in [
        "nce_witness_mu0.json",
        "nce_witness_mu1.json",
        "nce_plan.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let rep = report(dir.path(), "nce");
    assert_eq!(rep["verdict"], "fail");
    assert_eq!(rep["config"]["seed"], 7);
    assert_eq!(rep["config"]["trials"], 10000);
    let t = synthnull(
        dir.path(),
        &[
            "nce",
            "--input",
            path_arg(&bump),
            "--mu0",
            path_arg(&dir.path().join("nce_witness_mu0.json")),
            "--mu1",
            path_arg(&dir.path().join("nce_witness_mu1.json")),
        ],
    );
    assert_eq!(code(&t), 1);
    assert!(report(dir.path(), "nce")["details"]["witness"].is_object());
}

#[test]
fn localize_agrees_on_cone() {
    let dir = TempDir::new().unwrap();
    let cone = dir.path().join("cone.json");
    synthnull(
        dir.path(),
        &[
            "generate",
            "--output",
            path_arg(&cone),
            "cone",
            "--rays",
            "4",
        ],
    );
    let o = synthnull(
        dir.path(),
        &["localize", "--input", path_arg(&cone), "--trials", "200"],
    );
    assert_eq!(code(&o), 0);
    let rep = report(dir.path(), "localize");
    assert_eq!(rep["details"]["cd_verdict"], "pass");
    assert_eq!(rep["config"]["N"].as_f64().unwrap(), 4.0);
}

#[test]
fn malformed_input_exits_three_with_position() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"rays\": [],\n  \"colour\": 1\n}\n").unwrap();
    let o = synthnull(dir.path(), &["validate", "--input", path_arg(&bad)]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("colour"), "{err}");
    let rep = report(dir.path(), "validate");
    assert_eq!(rep["exit_code"], 3);
    assert!(rep["error"].as_str().unwrap().contains("line 3"));
}

#[test]
fn bad_configuration_exits_three() {
    let dir = TempDir::new().unwrap();
    let cone = dir.path().join("cone.json");
    synthnull(
        dir.path(),
        &[
            "generate",
            "--output",
            path_arg(&cone),
            "cone",
            "--rays",
            "4",
        ],
    );
    let cases: [&[&str]; 4] = [
        &["nce", "--input", path_arg(&cone), "--trials", "0"],
        &["nce", "--input", path_arg(&cone), "--N", "-1"],
        &[
            "hawking",
            "--input",
            path_arg(&cone),
            "--first",
            "1",
            "--second",
            "2",
            "--eps",
            "1e-3,1e-2",
        ],
        &["no-such-command"],
    ];
    for args in cases {
        assert_eq!(code(&synthnull(dir.path(), args)), 3, "{args:?}");
    }
}

#[test]
fn reports_are_byte_identical_without_timestamp() {
    let dir = TempDir::new().unwrap();
    let bump = dir.path().join("bump.json");
    synthnull(
        dir.path(),
        &["generate", "--output", path_arg(&bump), "bump"],
    );
    let run = || {
        let o = synthnull(
            dir.path(),
            &[
                "nce",
                "--input",
                path_arg(&bump),
                "--trials",
                "300",
                "--seed",
                "11",
            ],
        );
        assert_eq!(code(&o), 1);
        (
            fs::read(dir.path().join("nce_report.json")).unwrap(),
            fs::read(dir.path().join("nce_witness_mu0.json")).unwrap(),
            o.stdout,
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn hawking_exits_by_verdict() {
    let dir = TempDir::new().unwrap();
    let cone = dir.path().join("cone.json");
    synthnull(
        dir.path(),
        &[
            "generate",
            "--output",
            path_arg(&cone),
            "cone",
            "--rays",
            "4",
        ],
    );
    let o = synthnull(
        dir.path(),
        &[
            "hawking",
            "--input",
            path_arg(&cone),
            "--first",
            "1",
            "--second",
            "2",
        ],
    );
    assert_eq!(code(&o), 0);
    let rep = report(dir.path(), "hawking");
    assert!((rep["details"]["check"]["content_first"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
    assert!((rep["details"]["check"]["content_second"].as_f64().unwrap() - 4.0).abs() <= 1e-9);
    let swapped = synthnull(
        dir.path(),
        &[
            "hawking",
            "--input",
            path_arg(&cone),
            "--first",
            "2",
            "--second",
            "1",
        ],
    );
    assert_eq!(code(&swapped), 2);
    assert_eq!(report(dir.path(), "hawking")["verdict"], "inapplicable");
}

#[test]
fn adversarial_sequence_is_inapplicable() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("adv");
    let g = synthnull(
        dir.path(),
        &[
            "generate",
            "--output",
            path_arg(&seq),
            "sequence",
            "--kind",
            "adversarial",
            "--steps",
            "3",
            "--rays",
            "4",
        ],
    );
    assert_eq!(code(&g), 0);
    let o = synthnull(
        dir.path(),
        &[
            "stability",
            "--manifest",
            path_arg(&seq.join("manifest.json")),
            "--N",
            "4",
            "--trials",
            "50",
        ],
    );
    assert_eq!(code(&o), 2);
    assert_eq!(report(dir.path(), "stability")["verdict"], "inapplicable");
}

#[test]
fn perturbed_cone_sequence_passes() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("pc");
    synthnull(
        dir.path(),
        &[
            "generate",
            "--output",
            path_arg(&seq),
            "sequence",
            "--kind",
            "perturbed-cone",
            "--steps",
            "3",
            "--rays",
            "4",
        ],
    );
    let o = synthnull(
        dir.path(),
        &[
            "stability",
            "--manifest",
            path_arg(&seq.join("manifest.json")),
            "--N",
            "4",
            "--trials",
            "50",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn warped_trace_conserves_norm_but_winds_less_than_a_turn() {
    let dir = TempDir::new().unwrap();
    let o = synthnull(dir.path(), &["warped"]);
    assert_eq!(code(&o), 1);
    let rep = report(dir.path(), "warped");
    let d = &rep["details"];
    assert_eq!(d["checks"]["norm_conserved"], true);
    assert_eq!(d["checks"]["step_stable"], true);
    assert_eq!(d["checks"]["winding"], false);
    assert!((d["winding_rad"].as_f64().unwrap() - 2.0).abs() < 0.1);
    assert!(dir.path().join("warped_trace.csv").exists());
    let relaxed = synthnull(dir.path(), &["warped", "--min-turns", "0.25"]);
    assert_eq!(code(&relaxed), 0);
}

#[test]
fn csv_summary_and_env_output_dir() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_synthnull"))
        .env("SYNTHNULL_OUT", dir.path())
        .args(["--format", "csv", "generate", "cone", "--rays", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("cone.json").exists());
    let csv = fs::read_to_string(dir.path().join("generate_summary.csv")).unwrap();
    assert!(csv.starts_with("key,value\nverdict,pass\n"));
}
