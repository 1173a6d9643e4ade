use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ginvkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ginvkit"))
        .args(args)
        .env("GINVKIT_THREADS", "2")
        .output()
        .expect("spawn ginvkit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    parse_csv(&std::fs::read_to_string(path).unwrap())
}

fn parse_csv(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|f| f.trim().parse().unwrap()).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn l1_columns_on_dirac_hadamard_give_identity_block() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let x = dir.path().join("x.csv");
    let o = ginvkit(&["construct", "dirac_hadamard", "--m", "4", "-o", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ginvkit(&["pinv", a.to_str().unwrap(), "--norm", "col:1,1", "-o", x.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let x = read_csv(&x);
    assert_eq!((x.len(), x[0].len()), (8, 4));
    for (i, row) in x.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-6, "x[{i}][{j}] = {v}");
        }
    }
}

#[test]
fn frobenius_columns_give_the_mpp() {
    let dir = tempfile::tempdir().unwrap();
    // A = [[1,1,0],[1,0,1]]; A† = Aᵀ(AAᵀ)⁻¹ with AAᵀ = [[2,1],[1,2]].
    let a = write(dir.path(), "a.csv", "1,1,0\n1,0,1\n");
    let o = ginvkit(&["pinv", &a, "--norm", "col:2,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let x = parse_csv(&stdout(&o));
    let want = [[1.0 / 3.0, 1.0 / 3.0], [2.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, 2.0 / 3.0]];
    for i in 0..3 {
        for j in 0..2 {
            assert!((x[i][j] - want[i][j]).abs() < 1e-9, "{x:?}");
        }
    }
    assert!(stderr(&o).contains("PASS"), "summary goes to stderr when X is on stdout");
}

#[test]
fn unsupported_norm_exits_2_with_supported_list() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "1,1,0\n1,0,1\n");
    let o = ginvkit(&["pinv", &a, "--norm", "col:0.5,1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("col:0.5,1") && err.contains("supported"), "{err}");
}

#[test]
fn parse_errors_name_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "bad.csv", "1,2,3\n4,five,6\n");
    let o = ginvkit(&["pinv", &a, "--norm", "entrywise:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.csv:2:2"), "{}", stderr(&o));
    let ragged = write(dir.path(), "ragged.csv", "1,2,3\n4,5\n");
    let o = ginvkit(&["pinv", &ragged, "--norm", "entrywise:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("expected 3 columns, found 2"), "{}", stderr(&o));
}

#[test]
fn tall_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "tall.csv", "1,0\n0,1\n1,1\n");
    let o = ginvkit(&["pinv", &a, "--norm", "entrywise:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("g.csv");
    let o = ginvkit(&["construct", "gaussian", "--m", "3", "--n", "5", "--seed", "11", "-o", a.to_str().unwrap()]);
    assert!(o.status.success());
    let x1 = dir.path().join("x1.csv");
    let x2 = dir.path().join("x2.csv");
    for x in [&x1, &x2] {
        let o = ginvkit(&["pinv", a.to_str().unwrap(), "--norm", "entrywise:1", "-o", x.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&x1).unwrap(), std::fs::read(&x2).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    let values = parse_csv(&text);
    let rewritten: Vec<String> = values
        .iter()
        .map(|r| r.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(rewritten.join("\n") + "\n", text);
}

#[test]
fn verify_unbiasedness_passes() {
    let o = ginvkit(&[
        "verify", "unbiasedness", "--m", "3", "--n", "5", "--trials", "500", "--norm", "entrywise:1", "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS max_offdiagonal_deviation_in_standard_errors"));
}

#[test]
fn verify_unbiasedness_is_independent_of_thread_count() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("r.json");
        let o = Command::new(env!("CARGO_BIN_EXE_ginvkit"))
            .args(["verify", "unbiasedness", "--trials", "64", "--ensemble", "rademacher", "--seed", "3", "--json"])
            .arg(&json)
            .env("GINVKIT_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stdout(&o));
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        v["wall_time_ms"] = Value::Null;
        v
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn verify_sparsity_passes() {
    let o = ginvkit(&["verify", "sparsity", "--m", "4", "--n", "8", "--seeds", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("20 of 20 checks passed"), "{}", stdout(&o));
}

#[test]
fn verify_counterexamples_a1() {
    let o = ginvkit(&["verify", "counterexamples", "--family", "a1", "--m", "3", "--n", "5", "--p", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("PASS mpp certificate (expected to fail)"), "{out}");
    assert!(out.contains("PASS delta"), "{out}");
}

#[test]
fn verify_counterexamples_other_families() {
    for (family, p) in [("a2", "1"), ("a3", "1"), ("a4", "1"), ("a5", "3"), ("a1", "2")] {
        let o = ginvkit(&["verify", "counterexamples", "--family", family, "--p", p]);
        assert_eq!(o.status.code(), Some(0), "{family}: {}", stdout(&o));
    }
    let o = ginvkit(&["verify", "counterexamples"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_mpp_table_and_prox_properties() {
    for suite in ["mpp-table", "prox-properties"] {
        let o = ginvkit(&["verify", suite]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stdout(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn failing_check_exits_1() {
    // One iteration cannot reach the sparsity pattern.
    let o = ginvkit(&["verify", "sparsity", "--seeds", "2", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn json_report_layout() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let o = ginvkit(&["verify", "sparsity", "--seeds", "2", "--seed", "5", "--json", json.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&json).unwrap();
    // Top-level keys sit at two-space indent in the pretty output.
    let at = |k: &str| text.find(&format!("\n  \"{k}\":")).unwrap_or_else(|| panic!("missing {k}"));
    let keys = ["command", "inputs", "results", "tolerances", "wall_time_ms", "seed"];
    assert!(keys.windows(2).all(|w| at(w[0]) < at(w[1])), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], "verify sparsity");
    assert_eq!(v["seed"], 5);
    assert_eq!(v["inputs"]["m"], 4);
    let first = &v["results"][0];
    assert!(first["name"].is_string() && first["passed"].is_boolean() && first["tolerance"].is_number());
}

#[test]
fn constructions_print_expected_matrices() {
    let o = ginvkit(&["construct", "example41"]);
    assert!(o.status.success());
    assert_eq!(parse_csv(&stdout(&o)), vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]]);

    let o = ginvkit(&["construct", "partial_hadamard", "--n", "8", "--rows", "0,1,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let h = parse_csv(&stdout(&o));
    assert_eq!((h.len(), h[0].len()), (3, 8));
    assert!(h.iter().flatten().all(|v| v.abs() == 1.0));

    let o = ginvkit(&["construct", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dirac_hadamard"));
    let o = ginvkit(&["construct", "partial_hadamard", "--n", "6", "--rows", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pginv_target_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a4.csv");
    let o = ginvkit(&["construct", "a4", "--m", "3", "--n", "6", "-o", a.to_str().unwrap()]);
    assert!(o.status.success());
    let o = ginvkit(&["pinv", a.to_str().unwrap(), "--norm", "col:1,1", "--target", "pginv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(parse_csv(&stdout(&o)).len(), 6);
}
