use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;
use sct_cli::bench::bench;
use sct_core::Policy;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn sct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sct"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("sct runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    let text = std::fs::read_to_string(path).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn valid(schema_name: &str, o: &Output) -> Json {
    let j: Json = serde_json::from_str(&stdout(o)).expect("JSON output");
    let v = schema(schema_name);
    let errors: Vec<String> = v.iter_errors(&j).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}\n{j}");
    j
}

fn temp_program(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::Builder::new().suffix(".sct").tempfile().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

#[test]
fn run_prints_values() {
    let o = sct(&["run", "corpus/ack.sct", "--mode", "monitor-whole"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "3");
}

#[test]
fn run_reports_size_change_errors() {
    let o = sct(&["run", "corpus/ack-buggy.sct", "--mode", "monitor-whole", "--json"]);
    assert_eq!(code(&o), 3);
    let j = valid("run.schema.json", &o);
    assert_eq!(j["answers"][0]["closure"], "ack-buggy:2");

    let o = sct(&["run", "corpus/fig2.sct", "--mode", "monitor", "--json"]);
    assert_eq!(code(&o), 3);
    let j = valid("run.schema.json", &o);
    assert_eq!(j["answers"][0]["kind"], "value");
    assert_eq!(j["answers"][1]["blame"], "c2");
}

#[test]
fn exit_codes_follow_answer_kind() {
    let rt = temp_program("(car 1)");
    let o = sct(&["run", rt.path().to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 2);
    assert_eq!(valid("run.schema.json", &o)["answers"][0]["error"], "domain");

    let o = sct(&["run", "corpus/omega.sct", "--max-steps", "500", "--json", "--counters"]);
    assert_eq!(code(&o), 6);
    let j = valid("run.schema.json", &o);
    assert_eq!(j["answers"][0]["steps"], 500);
    assert!(j["counters"]["steps"].as_u64().unwrap() >= 500);

    let o = sct(&["run", "corpus/omega.sct", "--mode", "monitor-whole", "--policy", "backoff:2"]);
    assert_eq!(code(&o), 3);

    assert_eq!(code(&sct(&["run", "corpus/missing.sct"])), 1);
    let bad = temp_program("(define (f x) x");
    assert_eq!(code(&sct(&["run", bad.path().to_str().unwrap()])), 1);
    assert_ne!(code(&sct(&["run", "corpus/ack.sct", "--policy", "sometimes"])), 0);
}

#[test]
fn verify_exit_codes() {
    let o = sct(&["verify", "corpus/ack.sct", "--entry", "ack", "--json"]);
    assert_eq!(code(&o), 0);
    let j = valid("verify.schema.json", &o);
    assert_eq!(j["graphs"][0]["graphs"].as_array().unwrap().len(), 2);

    let o = sct(&["verify", "corpus/nfa.sct", "--entry", "state1", "--json"]);
    assert_eq!(code(&o), 4);
    let j = valid("verify.schema.json", &o);
    assert_eq!(j["witness"]["arcs"], serde_json::json!([[0, "<=", 0]]));

    let o = sct(&["verify", "corpus/id.sct", "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(valid("verify.schema.json", &o)["graphs"], serde_json::json!([]));

    let o = sct(&["verify", "corpus/ho-sc-ack.sct", "--entry", "ack", "--json"]);
    assert_eq!(code(&o), 5);
    assert_eq!(valid("verify.schema.json", &o)["reason"], "unsupported-feature");

    assert_eq!(code(&sct(&["verify", "corpus/ack.sct", "--entry", "nope"])), 1);
}

#[test]
fn trace_reports_prog_verdicts() {
    let verdicts = |j: &Json| -> Vec<bool> {
        j["snapshots"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|s| s.as_array().unwrap().iter().map(|e| e["prog"].as_bool().unwrap()))
            .collect()
    };
    let o = sct(&["trace", "corpus/ack.sct", "--json"]);
    assert_eq!(code(&o), 0);
    let j = valid("trace.schema.json", &o);
    assert!(verdicts(&j).iter().all(|ok| *ok));

    let o = sct(&["trace", "corpus/ascend-then-stop.sct", "--json"]);
    let j = valid("trace.schema.json", &o);
    assert_eq!(j["answer"]["value"], "0");
    assert!(verdicts(&j).iter().any(|ok| !ok));

    let lit = temp_program("42");
    let o = sct(&["trace", lit.path().to_str().unwrap(), "--json"]);
    let j = valid("trace.schema.json", &o);
    assert_eq!(j["snapshots"], serde_json::json!([[]]));
}

#[test]
fn bench_orders_overheads() {
    let dir = root().join("corpus/bench");
    let mut warnings = Vec::new();
    let policies = [Policy::Always, Policy::Backoff(1), Policy::Off];
    let r = bench(&[dir], &policies, 1_000_000, &mut warnings).unwrap();
    let ratio = |p, pol| r.ratio(p, pol).unwrap();
    assert!(ratio("sum", Policy::Always) > ratio("fact", Policy::Always));
    for program in ["fact", "sum", "msort"] {
        assert!((ratio(program, Policy::Off) - 1.0).abs() < 0.01, "{program}");
    }
    assert_eq!(r.excluded.len(), 1);
    assert_eq!(r.excluded[0].program, "omega");
    assert!(String::from_utf8(warnings).unwrap().contains("omega"));
}

#[test]
fn bench_writes_csv_and_json() {
    let out = tempfile::tempdir().unwrap();
    let o = sct(&[
        "bench",
        "corpus/bench/sum.json",
        "corpus/bench/omega.json",
        "--max-steps",
        "100000",
        "--out",
        out.path().to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = valid("bench.schema.json", &o);
    assert_eq!(j["rows"].as_array().unwrap().len(), 2);
    let written: Json =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("bench.json")).unwrap())
            .unwrap();
    assert_eq!(written, j);
    let mut csv = csv::Reader::from_path(out.path().join("bench.csv")).unwrap();
    assert!(csv.headers().unwrap().iter().any(|h| h == "ratio"));
    assert_eq!(csv.records().count(), 2);
}
