//! Exit-code contract and JSON output of the `effekt` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn effekt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_effekt"))
        .args(args)
        .env_remove("EFFEKT_SEED")
        .output()
        .expect("spawn effekt")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

struct Files(TempDir);

impl Files {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }

    fn write(&self, name: &str, value: Value) -> String {
        let path: PathBuf = self.0.path().join(name);
        std::fs::write(&path, value.to_string()).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn real_matrix(&self, name: &str, rows: &[&[f64]]) -> String {
        let n = rows.len();
        self.write(name, json!({"dim": n, "re": rows, "im": vec![vec![0.0; n]; n]}))
    }
}

/// `s · v vᵀ` for a real unit vector `v`.
fn scaled_ray(s: f64, v: [f64; 2]) -> Vec<Vec<f64>> {
    (0..2).map(|i| (0..2).map(|j| s * v[i] * v[j]).collect()).collect()
}

#[test]
fn leq_holds_for_half() {
    let f = Files::new();
    let b = f.real_matrix("b.json", &[&[0.6, 0.2], &[0.2, 0.4]]);
    let a = f.real_matrix("a.json", &[&[0.3, 0.1], &[0.1, 0.2]]);
    let out = effekt(&["check", "leq", &a, &b, "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["holds"], true);
    assert_eq!(code(&effekt(&["check", "leq", &b, &a])), 1);
}

#[test]
fn coexist_on_two_thirds_pair_fails_with_negative_margin() {
    let f = Files::new();
    let to_rows = |m: Vec<Vec<f64>>| json!({"dim": 2, "re": m, "im": [[0.0, 0.0], [0.0, 0.0]]});
    let e = f.write("e.json", to_rows(scaled_ray(2.0 / 3.0, [1.0, 0.0])));
    let g = f.write("f.json", to_rows(scaled_ray(2.0 / 3.0, [0.8, 0.6])));
    let out = effekt(&["check", "coexist", &e, &g, "--json"]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["decision"], "not-coexistent");
    assert!(v["margin"].as_f64().unwrap() < 0.0);
    assert!(v["witness"].is_null());
    for key in ["path", "iterations"] {
        assert!(v.get(key).is_some());
    }
}

#[test]
fn coexist_scalar_reports_witness() {
    let f = Files::new();
    let e = f.real_matrix("e.json", &[&[0.3, 0.0], &[0.0, 0.3]]);
    let g = f.real_matrix("f.json", &[&[0.9, 0.1], &[0.1, 0.2]]);
    let out = effekt(&["check", "coexist", &e, &g]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["decision"], "coexistent");
    assert_eq!(v["path"], "scalar");
    let w = &v["witness"]["re"];
    assert!((w[0][0].as_f64().unwrap() - 0.27).abs() < 1e-12);
}

#[test]
fn strength_of_scalar_effect() {
    let f = Files::new();
    let e = f.real_matrix("e.json", &[&[0.35, 0.0, 0.0], &[0.0, 0.35, 0.0], &[0.0, 0.0, 0.35]]);
    let phi = f.write("phi.json", json!({"dim": 3, "re": [1.0, -2.0, 0.5], "im": [0.0, 1.0, 0.0]}));
    let out = effekt(&["check", "strength", &e, &phi, "--json"]);
    assert_eq!(code(&out), 0);
    assert!((stdout_json(&out)["value"].as_f64().unwrap() - 0.35).abs() < 1e-12);
    let out = effekt(&["check", "probability", &e, &phi, "--json"]);
    assert!((stdout_json(&out)["value"].as_f64().unwrap() - 0.35).abs() < 1e-12);
}

#[test]
fn other_relations() {
    let f = Files::new();
    let p = f.real_matrix("p.json", &[&[1.0, 0.0], &[0.0, 0.0]]);
    let q = f.real_matrix("q.json", &[&[0.0, 0.0], &[0.0, 1.0]]);
    let h = f.real_matrix("h.json", &[&[0.5, 0.5], &[0.5, 0.5]]);
    let zero = f.real_matrix("z.json", &[&[0.0, 0.0], &[0.0, 0.0]]);
    let id = f.real_matrix("i.json", &[&[1.0, 0.0], &[0.0, 1.0]]);
    assert_eq!(code(&effekt(&["check", "orth", &p, &q])), 0);
    assert_eq!(code(&effekt(&["check", "orth", &p, &h])), 1);
    assert_eq!(code(&effekt(&["check", "commute", &p, &q])), 0);
    let out = effekt(&["check", "commute", &p, &h, "--json"]);
    assert_eq!(code(&out), 1);
    assert!((stdout_json(&out)["commutator_norm"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(code(&effekt(&["check", "mixture", &p, &zero, &id])), 1);
    let half = f.real_matrix("half.json", &[&[0.5, 0.0], &[0.0, 0.5]]);
    let out = effekt(&["check", "mixture", &half, &zero, &id, "--json"]);
    assert_eq!(code(&out), 0);
    assert!((stdout_json(&out)["t"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn input_errors_exit_3() {
    let f = Files::new();
    let big = f.real_matrix("big.json", &[&[1.2, 0.0], &[0.0, 0.5]]);
    let ok = f.real_matrix("ok.json", &[&[0.2, 0.0], &[0.0, 0.5]]);
    let out = effekt(&["check", "leq", &big, &ok]);
    assert_eq!(code(&out), 3);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("1.2"));
    let garbage = f.write("garbage.json", json!({"dim": 2, "re": [[1.0]]}));
    assert_eq!(code(&effekt(&["check", "leq", &garbage, &ok])), 3);
    assert_eq!(code(&effekt(&["check", "leq", &ok])), 3);
    assert_eq!(code(&effekt(&["check", "nonsense", &ok, &ok])), 3);
    assert_eq!(code(&effekt(&["suite", "no-such-suite"])), 3);
    assert_eq!(code(&effekt(&["classify", "/nonexistent/map.json"])), 3);
    let bad_map = f.write("map.json", json!({"tag": "unitary", "U": {"dim": 2, "re": [[1.0, 1.0], [0.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}}));
    assert_eq!(code(&effekt(&["classify", &bad_map])), 3);
}

#[test]
fn suite_writes_report_and_honours_env_seed() {
    let f = Files::new();
    let out_path = f.0.path().join("report.json");
    let out_str = out_path.to_string_lossy().into_owned();
    let out = Command::new(env!("CARGO_BIN_EXE_effekt"))
        .args(["suite", "weyl", "--trials", "20", "--dims", "2,3", "--out", &out_str])
        .env("EFFEKT_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report, stdout_json(&out));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["dims"], json!([2, 3]));
    assert_eq!(report["ok"], true);
}

#[test]
fn gallery_with_seed_7() {
    let out = effekt(&["suite", "gallery", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    let props = report["properties"].as_array().unwrap();
    let witnesses = props.iter().filter(|p| p["witness"].is_object()).count();
    assert_eq!(witnesses, 3);
}

#[test]
fn classify_map_files() {
    let f = Files::new();
    let unitary = f.write(
        "u.json",
        json!({"tag": "unitary", "U": {"dim": 2, "re": [[0.0, 1.0], [1.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}}),
    );
    let out = effekt(&["classify", &unitary, "--trials", "40"]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    for key in ["order_fwd", "order_bwd", "orthogonality", "commutativity", "coexistence", "mixture", "probability"] {
        assert_eq!(r[key]["holds"], true, "{key}");
    }

    let swap = f.write("s.json", json!({"tag": "swap01", "dim": 2}));
    let r = stdout_json(&effekt(&["classify", &swap, "--trials", "40"]));
    assert_eq!(r["dim"], 2);
    assert_eq!(r["coexistence"]["holds"], true);
    assert_eq!(r["order_fwd"]["holds"], false);
    assert!(r["order_fwd"]["counterexample"]["inputs"].is_array());

    let mobius = f.write(
        "m.json",
        json!({"tag": "calculus", "U": {"dim": 2, "re": [[1.0, 0.0], [0.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}, "f": {"tag": "mobius", "a": 1.0}}),
    );
    let r = stdout_json(&effekt(&["classify", &mobius, "--trials", "40"]));
    assert!((r["symmetry"]["max_defect"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
}
