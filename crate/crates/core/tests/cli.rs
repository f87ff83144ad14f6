use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

use qubrain::bench::{RUN_RECORD_SCHEMA, SPLIT_MANIFEST_SCHEMA, SUMMARY_SCHEMA};
use qubrain::models::ModelKind;

fn qubrain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qubrain"))
        .args(args)
        .env_remove("QUBRAIN_DATA")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn assert_valid(schema: &str, path: &Path) {
    let schema: Value = serde_json::from_str(schema).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let msgs: Vec<String> = match compiled.validate(&doc) {
        Ok(()) => return,
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    panic!("{} is invalid: {msgs:?}", path.display());
}

#[test]
fn paramcount_prints_expected_counts() {
    for kind in ModelKind::ALL {
        let o = qubrain(&["paramcount", "--model", kind.id()]);
        assert!(o.status.success());
        let n = kind.expected_param_count();
        assert!(stdout(&o).starts_with(&format!("{}: {n} parameters (expected {n} = ", kind.id())));
    }
}

#[test]
fn fixture_runs_emit_schema_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for (model, epochs) in [("ann", "3"), ("qsnn-qlstm", "2")] {
        let o = qubrain(&[
            "run",
            "--model",
            model,
            "--fixture",
            "--seeds",
            "0..3",
            "--epochs",
            epochs,
            "--out",
            out,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        for seed in 0..4 {
            assert_valid(
                RUN_RECORD_SCHEMA,
                &dir.path().join(format!("run_{model}_{seed}.json")),
            );
            assert_valid(
                SPLIT_MANIFEST_SCHEMA,
                &dir.path().join(format!("split_{model}_{seed}.json")),
            );
        }
        assert_valid(
            SUMMARY_SCHEMA,
            &dir.path().join(format!("summary_{model}.json")),
        );
    }

    let before = fs::read(dir.path().join("summary_ann.json")).unwrap();
    fs::remove_file(dir.path().join("summary_ann.json")).unwrap();
    let o = qubrain(&["summarize", "--in", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(dir.path().join("summary_ann.json")).unwrap(),
        before
    );
    assert!(stdout(&o).contains("qsnn-qlstm: 4 seeds"));
}

#[test]
fn data_path_comes_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tx.csv");
    let out = dir.path().join("out");
    fs::write(&csv, qubrain::data::FIXTURE_CSV).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qubrain"))
        .args([
            "run", "--model", "ann", "--seeds", "1", "--epochs", "1", "--out",
        ])
        .arg(&out)
        .env("QUBRAIN_DATA", &csv)
        .output()
        .unwrap();
    // Full protocol splits do not fit in the fixture.
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("configuration error"));

    let o = qubrain(&[
        "run",
        "--model",
        "ann",
        "--seeds",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--data"));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(!qubrain(&["paramcount", "--model", "cnn"]).status.success());
    assert!(!qubrain(&[
        "run",
        "--model",
        "ann",
        "--fixture",
        "--seeds",
        "3..1",
        "--out",
        "/tmp/x"
    ])
    .status
    .success());
    assert!(!qubrain(&["gradcheck", "--module", "optim"])
        .status
        .success());
    let o = qubrain(&[
        "run",
        "--model",
        "ann",
        "--data",
        "/nonexistent/tx.csv",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gradcheck_command_reports_each_case() {
    let o = qubrain(&["gradcheck", "--module", "nn"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().count() >= 3);
    assert!(text.lines().all(|l| l.starts_with("ok   nn::")));
}
