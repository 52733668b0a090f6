//! CLI behaviors: schema validity of every subcommand's JSON output,
//! byte-identical reruns under a fixed seed, and the exit-code contract.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

use tensorbound_core::tensor::{dicke_tensor, SparseTensor, SupportPoint};
use tensorbound_core::tightness::dicke_standard_labeling;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tensorbound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn schema(name: &str) -> JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(name);
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let doc: Value = serde_json::from_str(&text).expect("schema parses");
    JSONSchema::compile(&doc).expect("schema compiles")
}

fn assert_valid(schema_name: &str, value: &Value) {
    let compiled = schema(schema_name);
    let result = compiled.validate(value);
    if let Err(errors) = result {
        let msgs: Vec<String> = errors.map(|e| format!("{e}")).collect();
        panic!("{schema_name} rejects output: {}", msgs.join("; "));
    }
}

fn scratch_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-fixtures");
    fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn write_fixture(name: &str, value: &Value) -> PathBuf {
    let path = scratch_dir().join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).expect("write fixture");
    path
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        vec!["bound", "dicke", "--lambda", "2,1", "--seed", "5"],
        vec![
            "lab",
            "experiment",
            "--dicke",
            "1,2",
            "--power",
            "3",
            "--trials",
            "5",
            "--seed",
            "5",
            "--no-target",
        ],
        vec!["table", "complete", "--kmax", "6", "--format", "csv"],
        vec![
            "tight",
            "check",
            "--tensor",
            CHECK_FIXTURE.as_str(),
            "--labeling",
            LABEL_FIXTURE.as_str(),
        ],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?} output differs between runs");
    }
}

// fixtures shared across tests, created once
use std::sync::LazyLock;
static CHECK_FIXTURE: LazyLock<String> = LazyLock::new(|| {
    let t = dicke_tensor(&[2, 2]).unwrap();
    write_fixture("d22.json", &t.to_json())
        .display()
        .to_string()
});
static LABEL_FIXTURE: LazyLock<String> = LazyLock::new(|| {
    let l = dicke_standard_labeling(&[2, 2]);
    write_fixture("d22-labeling.json", &l.to_json())
        .display()
        .to_string()
});
static NOT_TIGHT_FIXTURE: LazyLock<String> = LazyLock::new(|| {
    let full = SparseTensor::from_support(
        vec![2, 2],
        (0..2u64).flat_map(|a| (0..2u64).map(move |b| SupportPoint(vec![a, b]))),
    )
    .unwrap();
    write_fixture("square.json", &full.to_json())
        .display()
        .to_string()
});

#[test]
fn every_subcommand_output_validates_against_its_schema() {
    assert_valid(
        "bound.schema.json",
        &run_json(&["bound", "dicke", "--lambda", "2,1"]),
    );
    assert_valid(
        "bound.schema.json",
        &run_json(&["bound", "graph", "--cycle", "3", "--n", "2"]),
    );
    assert_valid(
        "bound.schema.json",
        &run_json(&[
            "bound",
            "file",
            "--tensor",
            CHECK_FIXTURE.as_str(),
            "--labeling",
            LABEL_FIXTURE.as_str(),
        ]),
    );
    assert_valid(
        "tight-check.schema.json",
        &run_json(&[
            "tight",
            "check",
            "--tensor",
            CHECK_FIXTURE.as_str(),
            "--labeling",
            LABEL_FIXTURE.as_str(),
        ]),
    );
    assert_valid(
        "tight-find.schema.json",
        &run_json(&["tight", "find", "--tensor", CHECK_FIXTURE.as_str()]),
    );
    assert_valid(
        "table.schema.json",
        &run_json(&["table", "complete", "--kmax", "6"]),
    );
    assert_valid(
        "certify-cw-border.schema.json",
        &run_json(&["certify", "cw-border", "--q", "1", "--k", "3"]),
    );
    assert_valid(
        "lab-avgfree.schema.json",
        &run_json(&["lab", "avgfree", "--k", "2", "--n", "9"]),
    );
    assert_valid(
        "lab-experiment.schema.json",
        &run_json(&[
            "lab",
            "experiment",
            "--dicke",
            "1,2",
            "--power",
            "3",
            "--trials",
            "3",
        ]),
    );
    assert_valid(
        "lab-diagonal.schema.json",
        &run_json(&["lab", "diagonal", "--unit", "2,3", "--power", "2"]),
    );
    assert_valid("cuts.schema.json", &run_json(&["cuts", "--complete", "4"]));
}

#[test]
fn exit_codes_follow_the_contract() {
    // computation errors exit 1
    let out = run(&["bound", "file", "--tensor", NOT_TIGHT_FIXTURE.as_str()]);
    assert_eq!(out.status.code(), Some(1), "not-tight input must exit 1");
    assert!(String::from_utf8_lossy(&out.stderr).contains("not tight"));

    let out = run(&[
        "lab",
        "experiment",
        "--dicke",
        "1,2",
        "--power",
        "4",
        "--trials",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1), "non-integral type must exit 1");

    // tight find on a non-tight tensor reports the certificate and exits 1
    let out = run(&["tight", "find", "--tensor", NOT_TIGHT_FIXTURE.as_str()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "not_tight");
    assert_valid("tight-find.schema.json", &v);

    // corrupted certificate exits 1 with a fail verdict
    let out = run(&["certify", "cw-border", "--q", "1", "--k", "3", "--corrupt"]);
    assert_eq!(out.status.code(), Some(1));

    // usage errors exit 2
    let out = run(&["bound", "dicke"]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "missing --lambda is a usage error"
    );
    let out = run(&["cuts", "--complete", "4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2), "csv is unsupported for cuts");
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precision_and_pretty_render() {
    let six = run(&["bound", "dicke", "--lambda", "2,1"]);
    let full = run(&["bound", "dicke", "--lambda", "2,1", "--precision", "full"]);
    let vs: Value = serde_json::from_slice(&six.stdout).unwrap();
    let vf: Value = serde_json::from_slice(&full.stdout).unwrap();
    let bs = vs["bound_bits"].as_f64().unwrap();
    let bf = vf["bound_bits"].as_f64().unwrap();
    assert_eq!(bs, 0.918296, "six-decimal rendering");
    assert!(
        (bf - 0.9182958340544896).abs() < 1e-12,
        "full precision kept"
    );

    let pretty = run(&["cuts", "--cycle", "5", "--format", "pretty"]);
    assert!(pretty.status.success());
    let text = String::from_utf8(pretty.stdout).unwrap();
    assert!(text.contains("max_cut: 4"));
    assert!(text.contains("min_cut: 2"));
}

#[test]
fn worker_count_never_changes_output() {
    let default = run(&["bound", "dicke", "--lambda", "2,2", "--precision", "full"]);
    let single = run(&[
        "bound", "dicke", "--lambda", "2,2", "--precision", "full", "--workers", "1",
    ]);
    let four = run(&[
        "bound", "dicke", "--lambda", "2,2", "--precision", "full", "--workers", "4",
    ]);
    assert!(default.status.success());
    assert_eq!(default.stdout, single.stdout);
    assert_eq!(default.stdout, four.stdout);
}

#[test]
fn bound_graph_matches_known_value() {
    let v = run_json(&["bound", "graph", "--cycle", "3", "--precision", "full"]);
    let bound = v["bound_bits"].as_f64().unwrap();
    assert!((bound - 2.0).abs() < 1e-6);
    assert_eq!(v["closed_form"], "2");
}

#[test]
fn certify_reports_pass_text() {
    let v = run_json(&["certify", "cw-border", "--q", "2", "--k", "4"]);
    assert_eq!(v["result"], "pass");
    assert_eq!(v["pass"], true);
}
