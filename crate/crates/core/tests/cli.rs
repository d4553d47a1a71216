use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serialdep"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL_BOUNDS: &[&str] = &["bivariate-bounds", "--eta-grid", "0:0.02:0.01"];

#[test]
fn bounds_table_schema_and_header() {
    let o = run(SMALL_BOUNDS);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# serialdep seed=1 spec={"));
    let spec: Value = serde_json::from_str(header.split_once("spec=").unwrap().1).unwrap();
    assert_eq!(spec["kind"], "bivariate-bounds");
    assert!(spec.get("out").is_none() && spec.get("threads").is_none());
    assert_eq!(lines.next().unwrap(), "eta,lower,upper,lower_attained,upper_attained");
    assert_eq!(lines.next().unwrap(), "0.000000000,0.111111111,0.111111111,true,true");
    assert!(text.contains("# table constants") && text.contains("# table copulas"));
}

#[test]
fn json_mirrors_csv() {
    let csv = stdout(&run(SMALL_BOUNDS));
    let json: Value = serde_json::from_str(&stdout(&run(&[SMALL_BOUNDS, &["--format", "json"]].concat()))).unwrap();
    let rows = json["tables"]["bounds"].as_array().unwrap();
    let body: Vec<&str> = csv.lines().skip(2).take_while(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), body.len());
    for (row, line) in rows.iter().zip(body) {
        let cells: Vec<&str> = line.split(',').collect();
        for (i, key) in ["eta", "lower", "upper"].iter().enumerate() {
            let v: f64 = cells[i].parse().unwrap();
            assert!((row[key].as_f64().unwrap() - v).abs() < 1e-9, "{key}");
        }
        assert_eq!(row["upper_attained"].as_bool().unwrap().to_string(), cells[4]);
    }
    assert_eq!(json["header"]["seed"], 1);
}

#[test]
fn out_writes_sibling_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bounds.csv");
    let o = run(&[SMALL_BOUNDS, &["--out", out.to_str().unwrap()]].concat());
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["bounds.constants.csv", "bounds.copulas.csv", "bounds.csv"]);
}

#[test]
fn same_seed_same_bytes_other_seed_differs() {
    let args = [
        "serial-xi1",
        "--model",
        "toy",
        "--outer",
        "4",
        "--inner",
        "4",
        "--reps",
        "5",
        "--samples",
        "1000",
    ];
    let a = stdout(&run(&args));
    let b = stdout(&run(&[&args[..], &["--threads", "3"]].concat()));
    let c = stdout(&run(&[&args[..], &["--seed", "2"]].concat()));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["serial-xi1", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["serial-xi1", "--model", "toy", "--outer", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["bivariate-bounds", "--out", "/nonexistent/dir/x.csv"])
            .status
            .code(),
        Some(2)
    );
    // q small with K = n = 2: every replication is exactly zero
    let o = run(&[
        "serial-xi1",
        "--model",
        "toy",
        "--q",
        "0.05",
        "--outer",
        "2",
        "--inner",
        "2",
        "--reps",
        "2",
        "--samples",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not positive"));
}

#[test]
fn oracle_check_tables() {
    let o = run(&[
        "oracle-check",
        "--reps",
        "100",
        "--scaling-outer",
        "4",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let json: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let unb = json["tables"]["unbiasedness"].as_array().unwrap();
    assert_eq!(unb.len(), 2);
    // exact value for h = x1 x2 x3, q = 0.7: 4q²(q(1−q))²
    let want = 4.0 * 0.49 * (0.21f64).powi(2);
    assert!((unb[0]["oracle"].as_f64().unwrap() - want).abs() < 1e-9);
    assert!(json["tables"]["scaling"].is_array());
}
