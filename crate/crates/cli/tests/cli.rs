use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use regex::Regex;
use serde_json::Value;

use chardiff::report::REPORT_SCHEMA;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn chardiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chardiff"))
        .args(args)
        .env("CHARDIFF_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn with_files<'a>(cmd: &'a str, source: &'a Path, target: &'a Path) -> Vec<String> {
    vec![
        cmd.into(),
        "--source".into(),
        source.display().to_string(),
        "--target".into(),
        target.display().to_string(),
    ]
}

fn employees(cmd: &str, extra: &[&str]) -> Output {
    let (a, b) = (data("employees_2016.csv"), data("employees_2017.csv"));
    let mut args = with_files(cmd, &a, &b);
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    chardiff(&refs)
}

const GOLDEN: &[&str] = &[
    "--key",
    "name",
    "--attr",
    "bonus",
    "--max-cond",
    "2",
    "--max-tran",
    "1",
    "--alpha",
    "0.5",
    "--top",
    "10",
    "--format",
    "json",
];

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Checks `value` against the subset of draft 2020-12 the report schema uses.
fn validate(schema: &Value, root: &Value, value: &Value, path: &str) -> Result<(), String> {
    let err = |m: String| Err(format!("{path}: {m}"));
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").expect("local ref");
        return validate(&root["$defs"][name], root, value, path);
    }
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "number" => value.is_number(),
            "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
            other => panic!("unsupported type {other}"),
        };
        if !ok {
            return err(format!("expected {t}, got {value}"));
        }
    }
    if let Some(c) = schema.get("const") {
        if c != value {
            return err(format!("expected {c}"));
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.contains(value) {
            return err(format!("{value} not in {e:?}"));
        }
    }
    if let Some(x) = value.as_f64() {
        if let Some(m) = schema.get("minimum").and_then(Value::as_f64) {
            if x < m {
                return err(format!("{x} < {m}"));
            }
        }
        if let Some(m) = schema.get("maximum").and_then(Value::as_f64) {
            if x > m {
                return err(format!("{x} > {m}"));
            }
        }
        if let Some(m) = schema.get("exclusiveMinimum").and_then(Value::as_f64) {
            if x <= m {
                return err(format!("{x} <= {m}"));
            }
        }
    }
    if let (Some(p), Some(s)) = (schema.get("pattern").and_then(Value::as_str), value.as_str()) {
        if !Regex::new(p).unwrap().is_match(s) {
            return err(format!("{s:?} does not match {p}"));
        }
    }
    if let Some(items) = value.as_array() {
        if let Some(m) = schema.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < m {
                return err(format!("fewer than {m} items"));
            }
        }
        if let Some(s) = schema.get("items") {
            for (i, v) in items.iter().enumerate() {
                validate(s, root, v, &format!("{path}[{i}]"))?;
            }
        }
    }
    if let Some(obj) = value.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        for req in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(req.as_str().unwrap()) {
                return err(format!("missing {req}"));
            }
        }
        for (k, v) in obj {
            match (props.and_then(|p| p.get(k)), schema.get("additionalProperties")) {
                (Some(s), _) => validate(s, root, v, &format!("{path}.{k}"))?,
                (None, Some(Value::Bool(false))) => return err(format!("unexpected property {k}")),
                (None, Some(s)) if s.is_object() => validate(s, root, v, &format!("{path}.{k}"))?,
                _ => {}
            }
        }
    }
    if let Some(options) = schema.get("oneOf").and_then(Value::as_array) {
        let hits = options
            .iter()
            .filter(|s| validate(s, root, value, path).is_ok())
            .count();
        if hits != 1 {
            return err(format!("{hits} oneOf branches match"));
        }
    }
    Ok(())
}

fn schema_check(report: &Value) -> Result<(), String> {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    validate(&schema, &schema, report, "$")
}

#[test]
fn golden_report_puts_exact_summary_first() {
    let report = json(&employees("diff", GOLDEN));
    let top = &report["entries"][0];
    assert_eq!(top["score"]["accuracy"], 1.0);
    assert_eq!(top["cts"].as_array().unwrap().len(), 3);
    assert_eq!(report["metadata"]["total_abs_change"], "11480");
    // default pools are the top two condition and top one transformation
    // attributes: {edu, salary} x {bonus} x k in 1..=4
    assert_eq!(report["evaluated"], 12);
}

#[test]
fn reports_are_byte_identical() {
    let a = employees("diff", GOLDEN);
    let b = employees("diff", GOLDEN);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let md1 = employees("diff", &["--key", "name", "--attr", "bonus"]);
    let md2 = employees("diff", &["--key", "name", "--attr", "bonus"]);
    assert_eq!(md1.stdout, md2.stdout);
}

#[test]
fn reports_match_the_schema() {
    schema_check(&json(&employees("diff", GOLDEN))).unwrap();
    schema_check(&json(&employees(
        "diff",
        &["--key", "name", "--attr", "bonus", "--format", "json"],
    )))
    .unwrap();
    let salary = employees("diff", &["--key", "name", "--attr", "salary", "--format", "json"]);
    schema_check(&json(&salary)).unwrap();
}

#[test]
fn schema_checker_rejects_bad_reports() {
    let mut report = json(&employees("diff", GOLDEN));
    report["entries"][0]["score"]["accuracy"] = Value::from(1.5);
    assert!(schema_check(&report).is_err());
    let mut report = json(&employees("diff", GOLDEN));
    report["metadata"]["extra"] = Value::from(1);
    assert!(schema_check(&report).is_err());
    let mut report = json(&employees("diff", GOLDEN));
    report.as_object_mut().unwrap().remove("config");
    assert!(schema_check(&report).is_err());
}

#[test]
fn categorical_target_exits_three() {
    let out = employees("diff", &["--key", "name", "--attr", "gen"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("NonNumericTarget"));
}

#[test]
fn missing_key_is_a_usage_error() {
    let out = employees("shortlist", &["--attr", "bonus"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--key"));
    let out = employees("diff", &["--attr", "bonus"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn input_and_config_errors() {
    let missing = employees("diff", &["--key", "name", "--attr", "bonus", "--alpha", "2"]);
    assert_eq!(missing.status.code(), Some(4));
    let wrong_key = employees("diff", &["--key", "nope", "--attr", "bonus"]);
    assert_eq!(wrong_key.status.code(), Some(3));
    let a = data("employees_2016.csv");
    let nowhere = PathBuf::from("/nonexistent/x.csv");
    let mut args = with_files("diff", &a, &nowhere);
    args.extend(["--key", "name", "--attr", "bonus"].map(String::from));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(chardiff(&refs).status.code(), Some(2));
}

#[test]
fn shortlist_ranks_education_first() {
    let out = employees("shortlist", &["--key", "name", "--attr", "bonus", "--format", "json"]);
    let s = json(&out);
    assert_eq!(s["condition"][0]["attribute"], "edu");
    let md = employees("shortlist", &["--key", "name", "--attr", "bonus"]);
    let text = String::from_utf8(md.stdout).unwrap();
    let first_row = text
        .lines()
        .skip_while(|l| !l.starts_with("## Condition"))
        .nth(4)
        .unwrap();
    assert!(first_row.starts_with("| edu |"), "{first_row}");
}

#[test]
fn self_identical_files_have_no_association() {
    let a = data("employees_2016.csv");
    let mut args = with_files("shortlist", &a, &a);
    args.extend(["--key", "name", "--attr", "bonus", "--format", "json"].map(String::from));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let s = json(&chardiff(&refs));
    for side in ["condition", "transformation"] {
        for a in s[side].as_array().unwrap() {
            assert_eq!(a["association"], 0.0, "{a}");
        }
    }
}

#[test]
fn markdown_lists_exactly_top_n() {
    for top in ["1", "4", "10"] {
        let out = employees("diff", &["--key", "name", "--attr", "bonus", "--top", top]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let header = text
            .lines()
            .position(|l| l.starts_with("| Rank | Score | Accuracy | Interpretability"))
            .unwrap();
        let rows = text.lines().skip(header + 2).take_while(|l| l.starts_with('|')).count();
        assert_eq!(rows.to_string(), top);
    }
}

#[test]
fn warnings_go_to_stderr() {
    let out = employees(
        "diff",
        &[
            "--key",
            "name",
            "--attr",
            "bonus",
            "--cond-attrs",
            "edu,gen",
            "--format",
            "json",
        ],
    );
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gen"), "{err}");
    json(&out);
}

#[test]
fn type_hints_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let hints = dir.path().join("hints.json");
    std::fs::write(&hints, r#"{"exp": "categorical"}"#).unwrap();
    let hints = hints.display().to_string();
    let out = employees(
        "shortlist",
        &[
            "--key",
            "name",
            "--attr",
            "bonus",
            "--format",
            "json",
            "--type-hints",
            &hints,
        ],
    );
    let s = json(&out);
    let exp = s["condition"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["attribute"] == "exp")
        .unwrap();
    assert_eq!(exp["measure"], "eta");
}
