//! End-to-end tests of the binary: artifact shapes against the published
//! schemas, config precedence, error objects, and byte-level determinism.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::process::{Command, ExitStatus, Output};

use serde_json::Value;

fn run(args: &[&str]) -> (ExitStatus, String) {
    run_env(args, &[])
}

fn run_env(args: &[&str], envs: &[(&str, &str)]) -> (ExitStatus, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_magflow"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let Output { status, stdout, .. } = cmd.output().expect("binary runs");
    (status, String::from_utf8(stdout).expect("utf8 stdout"))
}

// minimal draft-07 subset validator, just enough for the published schemas:
// $ref (local definitions or another schema file), type, enum, minimum,
// properties, required, additionalProperties, items, minItems, maxItems

fn schemas() -> HashMap<String, Value> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schema");
    let mut out = HashMap::new();
    for entry in std::fs::read_dir(&dir).expect("schema dir exists") {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path).unwrap();
            let name = path.file_name().unwrap().to_str().unwrap().to_string();
            out.insert(name, serde_json::from_str(&text).unwrap());
        }
    }
    assert!(out.len() >= 9, "expected the full schema set, found {}", out.len());
    out
}

fn type_matches(v: &Value, name: &str) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.as_i64().is_some() || v.as_u64().is_some(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        other => panic!("schema names unknown type {other}"),
    }
}

fn validate(
    v: &Value,
    schema: &Value,
    root: &Value,
    files: &HashMap<String, Value>,
    path: &str,
) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        return if let Some(name) = r.strip_prefix("#/definitions/") {
            let target = root
                .pointer(&format!("/definitions/{name}"))
                .ok_or_else(|| format!("{path}: dangling $ref {r}"))?;
            validate(v, target, root, files, path)
        } else {
            let target = files
                .get(r)
                .ok_or_else(|| format!("{path}: unknown schema file {r}"))?;
            validate(v, target, target, files, path)
        };
    }
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(v, s),
            Value::Array(opts) => opts
                .iter()
                .any(|s| type_matches(v, s.as_str().expect("type name"))),
            _ => panic!("malformed type keyword"),
        };
        if !ok {
            return Err(format!("{path}: type mismatch, got {v}"));
        }
    }
    if let Some(opts) = schema.get("enum").and_then(Value::as_array) {
        if !opts.contains(v) {
            return Err(format!("{path}: {v} not in enum"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            return Err(format!("{path}: {x} below minimum {min}"));
        }
    }
    if let Some(obj) = v.as_object() {
        if let Some(req) = schema.get("required").and_then(Value::as_array) {
            for key in req {
                let key = key.as_str().expect("required key");
                if !obj.contains_key(key) {
                    return Err(format!("{path}: missing required key {key}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        if let Some(props) = props {
            for (key, sub) in props {
                if let Some(val) = obj.get(key) {
                    validate(val, sub, root, files, &format!("{path}/{key}"))?;
                }
            }
        }
        if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
            for key in obj.keys() {
                if !props.is_some_and(|p| p.contains_key(key)) {
                    return Err(format!("{path}: unexpected key {key}"));
                }
            }
        }
    }
    if let Some(arr) = v.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (arr.len() as u64) < min {
                return Err(format!("{path}: fewer than {min} items"));
            }
        }
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if (arr.len() as u64) > max {
                return Err(format!("{path}: more than {max} items"));
            }
        }
        if let Some(items) = schema.get("items") {
            for (i, item) in arr.iter().enumerate() {
                validate(item, items, root, files, &format!("{path}/{i}"))?;
            }
        }
    }
    Ok(())
}

fn assert_valid(artifact: &str, schema_file: &str) -> Value {
    let files = schemas();
    let v: Value = serde_json::from_str(artifact).expect("artifact parses");
    let schema = &files[schema_file];
    if let Err(e) = validate(&v, schema, schema, &files, "") {
        panic!("{schema_file} rejected artifact: {e}\n{artifact}");
    }
    v
}

#[test]
fn every_json_artifact_validates_against_its_schema() {
    let cases: &[(&[&str], &str)] = &[
        (&["spectrum", "--k", "6", "--B", "1.0", "--format", "json"], "spectrum.schema.json"),
        (
            &["spectrum", "--k", "6", "--B", "0.5", "--exact-rational", "--format", "json"],
            "spectrum.schema.json",
        ),
        (&["orbit", "--T", "2", "--dt", "0.1", "--format", "json"], "orbit.schema.json"),
        (
            &["birkhoff", "--T", "5", "--starts", "2", "--dt", "0.05", "--format", "json"],
            "birkhoff.schema.json",
        ),
        (
            &[
                "decay", "--T-grid", "10,30,100,330", "--samples", "2000", "--starts", "5",
                "--dt", "0.05", "--format", "json",
            ],
            "decay.schema.json",
        ),
        (
            &["variational", "--T", "3", "--dt", "0.1", "--format", "json"],
            "variational.schema.json",
        ),
        (&["area", "--samples", "2000", "--format", "json"], "area.schema.json"),
        (&["coherent", "--k", "40", "--m", "1", "--format", "json"], "coherent.schema.json"),
        (&["report"], "report.schema.json"),
    ];
    for (args, schema_file) in cases {
        let (status, out) = run(args);
        assert!(status.success(), "{args:?} failed:\n{out}");
        let v = assert_valid(&out, schema_file);
        assert_eq!(v["config"]["command"], args[0], "config echoes the subcommand");
    }
}

#[test]
fn spectrum_csv_rows_are_exact() {
    let (status, out) = run(&["spectrum", "--k", "10", "--B", "0.5"]);
    assert!(status.success());
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("# config {"));
    assert_eq!(lines[1], "k,m,value,scaled,multiplicity");
    assert_eq!(&lines[2..], &["10,0,2.5,0.025,9", "10,1,6.5,0.065,7", "10,2,9.5,0.095,5", "10,3,11.5,0.115,3", "10,4,12.5,0.125,"]);
}

#[test]
fn orbit_returns_to_identity_after_a_full_fiber_rotation() {
    let (status, out) = run(&[
        "orbit", "--E", "0", "--B", "1", "--T", "6.283185307179586", "--dt", "0.02",
    ]);
    assert!(status.success());
    let last = out.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(fields.len(), 7);
    assert!((fields[1] - 1.0).abs() <= 1e-8);
    assert!(fields[2].abs() <= 1e-8);
    assert!(fields[3].abs() <= 1e-8);
    assert!((fields[4] - 1.0).abs() <= 1e-8);
    assert!(fields[5].abs() <= 1e-8 && fields[6].abs() <= 1e-8);
}

#[test]
fn precondition_failures_exit_one_with_an_error_object() {
    let cases: &[(&[&str], &str)] = &[
        (&["decay", "--T-grid", "50,100,200"], "DegenerateFitError"),
        (&["spectrum", "--k", "10", "--B", "0.7"], "IntegralityError"),
        (&["decay", "--T-grid", "10,30,100,330", "--starts", "2"], "DomainError"),
    ];
    for (args, kind) in cases {
        let (status, out) = run(args);
        assert_eq!(status.code(), Some(1), "{args:?} should exit 1");
        let v = assert_valid(&out, "error.schema.json");
        assert_eq!(v["error"]["kind"], *kind, "{args:?}:\n{out}");
    }
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, r#"{{"k": 15, "B": 0.5, "seed": 99}}"#).unwrap();
    let path = file.path().to_str().unwrap();
    let (status, out) = run(&[
        "spectrum", "--config", path, "--k", "10", "--format", "json",
    ]);
    assert!(status.success(), "{out}");
    let v = assert_valid(&out, "spectrum.schema.json");
    assert_eq!(v["config"]["k"], 10, "flag wins over file");
    assert_eq!(v["config"]["B"], 0.5, "file wins over default");
    assert_eq!(v["config"]["seed"], 99, "file wins over default");
    assert_eq!(v["config"]["E"], 0.25, "untouched default survives");
}

#[test]
fn output_flag_writes_the_artifact_to_the_named_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("area.json");
    let path_str = path.to_str().unwrap();
    let (status, out) = run(&[
        "area", "--samples", "2000", "--format", "json", "--output", path_str,
    ]);
    assert!(status.success());
    assert!(out.is_empty(), "artifact goes to the file, not stdout");
    let text = std::fs::read_to_string(&path).unwrap();
    let v = assert_valid(&text, "area.schema.json");
    assert_eq!(v["config"]["output"], *path_str);
}

#[test]
fn report_artifact_is_byte_identical_across_runs_and_thread_counts() {
    let (s1, first) = run(&["report", "--seed", "42"]);
    let (s2, second) = run(&["report", "--seed", "42"]);
    assert!(s1.success() && s2.success());
    assert_eq!(first, second, "same seed must reproduce the same bytes");
    assert!(!first.is_empty());

    let (s3, third) = run_env(
        &["area", "--samples", "50000", "--format", "json"],
        &[("MAGFLOW_THREADS", "1")],
    );
    let (s4, fourth) = run_env(
        &["area", "--samples", "50000", "--format", "json"],
        &[("MAGFLOW_THREADS", "4")],
    );
    assert!(s3.success() && s4.success());
    assert_eq!(third, fourth, "thread count must not leak into artifacts");
}
