//! End-to-end tests of the `confsym` binary: exit codes, document
//! shapes, and byte-level determinism of the emitted JSON.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn confsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confsym")).args(args).output().unwrap()
}

fn confsym_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confsym")).args(args).env(key, val).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Fresh scratch directory per test; tests run in one process, so the
/// pid alone would collide.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("confsym-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_symbol(path: &Path, terms: Value) {
    let doc = json!({
        "schema_version": "1",
        "n": 3,
        "signature": [3, 0],
        "terms": terms,
    });
    std::fs::write(path, serde_json::to_string(&doc).unwrap()).unwrap();
}

#[test]
fn algebra_check_reports_a_closed_nondegenerate_algebra() {
    let out = confsym(&["algebra", "--p", "3", "--q", "0", "check"]);
    assert_eq!(code(&out), 0, "{}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["schema_version"], json!("1"));
    assert_eq!(v["generator_count"], json!(10));
    assert_eq!(v["brackets_closed"], json!(true));
    assert_eq!(v["killing_nondegenerate"], json!(true));
    assert_ne!(v["killing_determinant"], json!("0"));
}

#[test]
fn fixed_inputs_produce_identical_bytes() {
    let args = ["ckt", "--k", "1", "--s", "0", "--p", "3", "--q", "0"];
    let first = confsym(&args);
    let second = confsym(&args);
    assert_eq!(code(&first), 0);
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, second.stdout);
    let v = stdout_json(&first);
    assert_eq!(v["dimension"], json!(10));
    assert_eq!(v["stable"], json!(true));
}

#[test]
fn quantize_round_trips_through_files() {
    let dir = scratch("quantize");
    let input = dir.join("symbol.json");
    write_symbol(&input, json!([{"x": [0, 0, 0], "p": [2, 0, 0], "c": "1"}]));
    let out_path = dir.join("op.json");
    let run = |target: &Path| {
        confsym(&[
            "quantize",
            "--lambda",
            "1/2",
            "--mu",
            "1/2",
            "--p",
            "3",
            "--q",
            "0",
            "--in",
            input.to_str().unwrap(),
            "--out",
            target.to_str().unwrap(),
        ])
    };
    let out = run(&out_path);
    assert_eq!(code(&out), 0, "{}", stderr_text(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema_version"], json!("1"));
    assert_eq!(v["lambda"], json!("1/2"));
    assert_eq!(v["mu"], json!("1/2"));
    let terms = v["terms"].as_array().unwrap();
    assert!(!terms.is_empty());
    for t in terms {
        assert_eq!(t["dx"].as_array().unwrap().len(), 3);
        assert_eq!(t["dp"].as_array().unwrap().len(), 3);
    }
    // file output is as deterministic as standard output
    let again = dir.join("op2.json");
    assert_eq!(code(&run(&again)), 0);
    assert_eq!(std::fs::read(&out_path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn symmetry_verdicts_map_to_exit_codes() {
    let dir = scratch("symmetry");
    let killing = dir.join("translation.json");
    write_symbol(&killing, json!([{"x": [0, 0, 0], "p": [1, 0, 0], "c": "1"}]));
    let out = confsym(&[
        "symmetry",
        "verify",
        "--ell",
        "1",
        "--p",
        "3",
        "--q",
        "0",
        "--in",
        killing.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["status"], json!("symmetry"));
    assert!(v["d1"].is_object() && v["d2"].is_object());

    let generic = dir.join("generic.json");
    write_symbol(&generic, json!([{"x": [0, 1, 0], "p": [0, 2, 0], "c": "1"}]));
    let out = confsym(&[
        "symmetry",
        "verify",
        "--ell",
        "1",
        "--p",
        "3",
        "--q",
        "0",
        "--in",
        generic.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["status"], json!("defect"));
    assert!(!v["defect"]["terms"].as_array().unwrap().is_empty());
}

#[test]
fn star_component_zero_is_the_pointwise_product() {
    let dir = scratch("star");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    write_symbol(&a, json!([{"x": [0, 0, 0], "p": [1, 0, 0], "c": "1"}]));
    write_symbol(&b, json!([{"x": [0, 0, 0], "p": [0, 1, 0], "c": "1"}]));
    let out = confsym(&[
        "star",
        "--lambda",
        "1/2",
        "--m",
        "0",
        "--in1",
        a.to_str().unwrap(),
        "--in2",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["m"], json!(0));
    assert_eq!(
        v["component"]["terms"],
        json!([{"c": "1", "p": [1, 1, 0], "x": [0, 0, 0]}])
    );
}

#[test]
fn star_check_fails_with_a_parity_witness_at_weight_zero() {
    let out = confsym(&["star", "check", "--lambda", "0", "--maxdeg", "2"]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["symmetric_parity"], json!(false));
    assert_eq!(v["all_passed"], json!(false));
    assert!(v["parity_witness"].is_object());
    assert_eq!(v["gradation"], json!(true));
    assert_eq!(v["associativity"], json!(true));
}

#[test]
fn solver_statuses_appear_in_documents() {
    let out = confsym(&[
        "quantize", "solve", "--k", "2", "--delta", "5/3", "--lambda", "1/3", "--p", "3", "--q",
        "0",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["status"], json!("non_existent"));

    let out = confsym(&[
        "quantize", "solve", "--k", "2", "--delta", "0", "--lambda", "1/3", "--p", "3", "--q",
        "0",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["status"], json!("unique"));
    assert!(!v["coefficients"].as_array().unwrap().is_empty());
}

#[test]
fn ideal_documents_verify_membership() {
    let out = confsym(&["ideal", "--which", "Jlambda2", "--lambda", "1/2", "--p", "3", "--q", "0"]);
    assert_eq!(code(&out), 0, "{}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["kernel_verified"], json!(true));
    assert_eq!(v["casimir_shift_in_kernel"], json!(true));
    // C(n+2, 4) + 1 at n = 3
    assert_eq!(v["dimension"], json!(6));
}

#[test]
fn usage_errors_exit_with_two() {
    let out = confsym(&[
        "quantize", "solve", "--k", "1", "--delta", "0.5", "--lambda", "1/2", "--p", "3", "--q",
        "0",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("unparseable rational"));

    let out = confsym(&["frobnicate"]);
    assert_eq!(code(&out), 2);

    let out = confsym(&["ideal", "--which", "Jlambda2", "--p", "3", "--q", "0"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("needs --lambda"));

    let dir = scratch("mismatch");
    let sym = dir.join("sym.json");
    write_symbol(&sym, json!([{"x": [0, 0, 0], "p": [1, 0, 0], "c": "1"}]));
    let out = confsym(&[
        "symmetry",
        "verify",
        "--ell",
        "1",
        "--p",
        "2",
        "--q",
        "1",
        "--in",
        sym.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("differs from requested"));
}

#[test]
fn degree_cap_bounds_requests() {
    let args = ["ckt", "--k", "3", "--s", "1", "--p", "3", "--q", "0"];
    let out = confsym_env(&args, "CONFSYM_MAX_DEGREE", "2");
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("CONFSYM_MAX_DEGREE"));

    let out = confsym_env(&args, "CONFSYM_MAX_DEGREE", "junk");
    assert_eq!(code(&out), 2);

    let out = confsym_env(&["ckt", "--k", "1", "--s", "0", "--p", "3", "--q", "0"], "CONFSYM_MAX_DEGREE", "2");
    assert_eq!(code(&out), 0);
}

#[test]
fn report_all_passes_for_the_euclidean_model() {
    let out = confsym(&["report", "all", "--p", "3", "--q", "0"]);
    assert_eq!(code(&out), 0, "{}", stderr_text(&out));
    let v = stdout_json(&out);
    assert_eq!(v["all_passed"], json!(true));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 11);
    assert!(checks.iter().all(|c| c["passed"] == json!(true)));
}
