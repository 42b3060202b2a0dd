use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn vl(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_vl"))
        .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")))
        .args(args)
        .output()
        .expect("binary runs");
    let json = if out.stdout.is_empty() { Value::Null } else { serde_json::from_slice(&out.stdout).expect("JSON output") };
    (out.status.code().expect("exit code"), json)
}

#[test]
fn check_and_degree_on_shipped_models() {
    let (code, v) = vl(&["check", "--model", "models/vague_heap.json", "--world", "0", "--agent", "1", "p & ~D1 R1 p"]);
    assert_eq!(code, 0);
    assert_eq!(v["holds"], true);

    let (code, v) = vl(&["degree", "--model", "models/split_world.json", "--world", "0", "p & q"]);
    assert_eq!(code, 0);
    assert_eq!(v["degree"], "0/2");

    let (code, _) = vl(&["validate", "--model", "models/split_world.json"]);
    assert_eq!(code, 0);
}

#[test]
fn shipped_proofs_are_accepted() {
    for proof in ["proofs/d6_single_agent.json", "proofs/report_weakening.json", "proofs/definite_report.json"] {
        let (code, v) = vl(&["prove", "--proof", proof]);
        assert_eq!(code, 0, "{proof}");
        assert_eq!(v["ok"], true);
    }
}

#[test]
fn missing_model_is_a_usage_error() {
    let (code, _) = vl(&["validate", "--model", "models/absent.json"]);
    assert_eq!(code, 1);
}

#[test]
fn satisfiability_mode() {
    let (code, v) = vl(&["classify", "--sat", "p & ~p", "--agents", "1"]);
    assert_eq!(code, 2);
    assert_eq!(v["verdict"], "unsatisfiable");
    let (code, v) = vl(&["classify", "--sat", "R1 p & R2 ~p", "--agents", "2", "--objective", "p"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "satisfiable");
}

#[test]
fn scenarios_succeed() {
    for name in ["sensor", "sorites", "williamson"] {
        let (code, v) = vl(&["scenario", name]);
        assert_eq!(code, 0, "{name}");
        assert!(v.is_object());
    }
}

#[test]
fn small_fuzz_run_is_clean() {
    let (code, v) = vl(&["fuzz", "--trials", "200", "--seed", "3", "--threads", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["violations"].as_array().map(Vec::len), Some(0));
}
