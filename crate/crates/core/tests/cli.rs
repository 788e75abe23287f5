//! End-to-end checks of the `dgsta` binary: exit codes, JSON outputs against
//! the schemas shipped in `schema/`, and the train → eval round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dgsta"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn dgsta")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().join("schema")
}

fn load_schema(name: &str) -> Value {
    let path = schema_dir().join(name);
    let raw = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path:?}: {e}"));
    serde_json::from_str(&raw).expect("schema parses")
}

const TINY_SYNTH: &str = "classes=2,per_class=5,seed=3,frames=4";

fn tiny_train(dir: &Path) -> Value {
    let out = run(&[
        "train",
        "--synthetic",
        TINY_SYNTH,
        "--frames",
        "4",
        "--epochs",
        "2",
        "--batch-size",
        "4",
        "--dropout",
        "0",
        "--no-augment",
        "--seed",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "train failed: {}", String::from_utf8_lossy(&out.stderr));
    let raw = std::fs::read_to_string(dir.join("summary.json")).expect("summary.json written");
    serde_json::from_str(&raw).expect("summary parses")
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&["train", "--bogus-flag"])), 2);
    let out = run(&["train", "--dataset", "dhg"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--data-root"));
    assert_eq!(code(&run(&["masks", "--kind", "ssg", "--n", "5"])), 2);
    assert_eq!(code(&run(&["train", "--synthetic", TINY_SYNTH, "--gestures", "14"])), 2);
}

#[test]
fn data_errors_exit_3() {
    assert_eq!(code(&run(&["train", "--dataset", "dhg", "--data-root", "/nonexistent"])), 3);
    assert_eq!(code(&run(&["eval", "--checkpoint", "/nonexistent.ckpt.json"])), 3);
}

#[test]
fn check_failures_exit_4() {
    let out = run(&["bench", "--reps", "5"]);
    assert_eq!(code(&out), 4);
    let out = run(&["gradcheck", "--seeds", "2", "--corrupt", "stage1.h0.w_q"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn gradcheck_prints_group_table() {
    let out = run(&["gradcheck", "--seeds", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max rel err"));
    assert!(stdout.contains("gradient check: PASS"));
    assert!(stdout.contains("fc_w"));
}

#[test]
fn masks_render_both_formats() {
    let out = run(&["masks", "--kind", "spatial", "--t", "2", "--n", "3"]);
    assert_eq!(code(&out), 0);
    let ascii = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = ascii.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), 6, "one row per node:\n{ascii}");
    assert!(lines.iter().all(|l| l.len() == lines[0].len()));

    let out = run(&["masks", "--kind", "temporal", "--t", "2", "--n", "3", "--format", "pgm"]);
    assert_eq!(code(&out), 0);
    let pgm = String::from_utf8_lossy(&out.stdout);
    assert!(pgm.starts_with("P2"), "plain pgm header, got: {}", &pgm[..20.min(pgm.len())]);
    assert!(pgm.contains("6 6"));
}

#[test]
fn train_summary_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let summary = tiny_train(dir.path());
    assert_valid(&load_schema("summary.schema.json"), &summary);

    // The per-epoch CSV ships alongside and matches the recorded epochs.
    let csv = std::fs::read_to_string(dir.path().join("fold_0.csv")).expect("fold_0.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epoch,loss,train_acc,test_acc"));
    let epochs_run = summary["folds"][0]["epochs_run"].as_u64().unwrap() as usize;
    assert_eq!(lines.count(), epochs_run);

    // Unknown fields must fail validation — the schemas are closed.
    let mut spiked = summary.clone();
    spiked["travel_speed"] = Value::from(1.25);
    assert!(!errors_for(&load_schema("summary.schema.json"), &spiked).is_empty());
}

#[test]
fn bench_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "bench",
        "--t",
        "2",
        "--n",
        "4",
        "--d",
        "4",
        "--heads",
        "2",
        "--reps",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let raw = std::fs::read_to_string(dir.path().join("bench.json")).unwrap();
    let report: Value = serde_json::from_str(&raw).unwrap();
    assert_valid(&load_schema("bench.schema.json"), &report);
}

#[test]
fn eval_round_trips_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    tiny_train(dir.path());
    let ckpt = dir.path().join("fold_0.ckpt.json");
    let report_path = dir.path().join("eval.json");
    let out = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--synthetic",
        TINY_SYNTH,
        "--split",
        "test",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_valid(&load_schema("eval.schema.json"), &report);
    assert_eq!(report["split"], "test");
    assert_eq!(report["total"], 2); // one held-out recording per class
    let confusion = report["confusion"].as_array().unwrap();
    assert_eq!(confusion.len(), 2);

    // A checkpoint trained for 2 classes must be rejected on a 3-class set.
    let out = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--synthetic",
        "classes=3,per_class=5,seed=3,frames=4",
    ]);
    assert_eq!(code(&out), 2);
}

// --- a small validator for the draft-07 subset the shipped schemas use ---

fn assert_valid(schema: &Value, value: &Value) {
    let errors = errors_for(schema, value);
    assert!(errors.is_empty(), "schema violations: {errors:?}");
}

fn errors_for(schema: &Value, value: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    validate(schema, value, schema, "$", &mut errors);
    errors
}

fn resolve<'a>(schema: &'a Value, root: &'a Value) -> &'a Value {
    match schema.get("$ref").and_then(Value::as_str) {
        Some(path) => {
            let mut node = root;
            for key in path.trim_start_matches("#/").split('/') {
                node = node.get(key).expect("dangling $ref");
            }
            node
        }
        None => schema,
    }
}

fn type_matches(name: &str, value: &Value) -> bool {
    match name {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "number" => value.is_number(),
        "integer" => {
            value.is_i64() || value.is_u64() || value.as_f64().is_some_and(|f| f.fract() == 0.0)
        }
        other => panic!("schema names unsupported type {other:?}"),
    }
}

fn validate(schema: &Value, value: &Value, root: &Value, at: &str, errors: &mut Vec<String>) {
    let schema = resolve(schema, root);

    if let Some(name) = schema.get("type").and_then(Value::as_str) {
        if !type_matches(name, value) {
            errors.push(format!("{at}: expected {name}, got {value}"));
            return;
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            errors.push(format!("{at}: {value} not in {allowed:?}"));
        }
    }
    if let Some(v) = value.as_f64() {
        if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
            if v < min {
                errors.push(format!("{at}: {v} < minimum {min}"));
            }
        }
        if let Some(max) = schema.get("maximum").and_then(Value::as_f64) {
            if v > max {
                errors.push(format!("{at}: {v} > maximum {max}"));
            }
        }
        if let Some(min) = schema.get("exclusiveMinimum").and_then(Value::as_f64) {
            if v <= min {
                errors.push(format!("{at}: {v} <= exclusiveMinimum {min}"));
            }
        }
    }
    if let Some(object) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !object.contains_key(key) {
                    errors.push(format!("{at}: missing required field {key:?}"));
                }
            }
        }
        let properties = schema.get("properties").and_then(Value::as_object);
        let closed = schema.get("additionalProperties") == Some(&Value::Bool(false));
        for (key, field) in object {
            match properties.and_then(|p| p.get(key)) {
                Some(sub) => validate(sub, field, root, &format!("{at}.{key}"), errors),
                None if closed => errors.push(format!("{at}: unknown field {key:?}")),
                None => {}
            }
        }
    }
    if let Some(items) = value.as_array() {
        if let Some(sub) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                validate(sub, item, root, &format!("{at}[{i}]"), errors);
            }
        }
    }
}
