use std::fs;

use radshoot_cli::{run_with, Environment};
use serde_json::Value;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_env(args: &[&str], env: &Environment) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("radshoot").chain(args.iter().copied());
    let code = run_with(argv, env, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn run(args: &[&str]) -> Outcome {
    run_env(args, &Environment::default())
}

const PAINLEVE_3: &[&str] = &[
    "--family", "painleve", "--K", "1", "--A", "0.01", "--a0", "1", "--a1", "2",
];

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter().chain(extra).copied().collect()
}

#[test]
fn solve_painleve_emits_three_records() {
    let o = run(&with(&["solve"], &with(PAINLEVE_3, &["--format", "json"])));
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    let records = v.as_array().unwrap();
    assert_eq!(records.len(), 3);
    let lambdas: Vec<f64> = records.iter().map(|r| r["lambda"].as_f64().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn eigen_closed_form() {
    let o = run(&["eigen", "--a0", "1", "--a1", "1"]);
    assert_eq!(o.code, 0);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert!((v["lambda1"].as_f64().unwrap() + 1.0).abs() <= 1e-9);
}

#[test]
fn invalid_parameter_is_usage_error() {
    let o = run(&[
        "solve", "--family", "painleve", "--K", "-1", "--A", "1", "--a0", "1", "--a1", "2",
    ]);
    assert_eq!(o.code, 1);
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).code, 1);
    assert_eq!(run(&["frobnicate"]).code, 1);
    assert_eq!(run(&["eigen", "--a0", "1", "--a1", "1", "--bogus"]).code, 1);
    assert_eq!(run(&["solve", "--family", "painleve", "--K", "1"]).code, 1);
    assert_eq!(run(&["eigen", "--a0", "0", "--a1", "1"]).code, 1);
    let o = run(&["solve", "--problem", "/nonexistent/problem.json"]);
    assert_eq!(o.code, 1);
}

#[test]
fn help_goes_to_stdout() {
    let o = run(&["--help"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("solve"));
    assert!(o.stderr.is_empty());
}

#[test]
fn output_is_deterministic() {
    for fmt in ["json", "csv"] {
        let args = with(&["solve"], &with(PAINLEVE_3, &["--format"]));
        let mut args = args;
        args.push(fmt);
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.code, 0);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn csv_and_json_agree() {
    let json = run(&with(&["solve"], &with(PAINLEVE_3, &["--format", "json"])));
    let csv_out = run(&with(&["solve"], &with(PAINLEVE_3, &["--format", "csv"])));
    let records: Vec<Value> = serde_json::from_str(&json.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(csv_out.stdout.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["lambda", "class", "u1", "du1", "bc_res0", "bc_res1", "ode_res", "zeros"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), records.len());
    for (row, rec) in rows.iter().zip(&records) {
        let num = |i: usize| row[i].parse::<f64>().unwrap();
        assert_eq!(num(0), rec["lambda"].as_f64().unwrap());
        assert_eq!(&row[1], rec["sign_class"].as_str().unwrap());
        assert_eq!(num(2), rec["u1"].as_f64().unwrap());
        assert_eq!(num(3), rec["du1"].as_f64().unwrap());
        assert_eq!(num(4), rec["bc_residuals"][0].as_f64().unwrap());
        assert_eq!(num(5), rec["bc_residuals"][1].as_f64().unwrap());
        assert_eq!(num(6), rec["ode_residual"].as_f64().unwrap());
        let zeros: Vec<f64> = if row[7].is_empty() {
            vec![]
        } else {
            row[7].split(';').map(|z| z.parse().unwrap()).collect()
        };
        let expected: Vec<f64> = rec["zero_locations"]
            .as_array()
            .unwrap()
            .iter()
            .map(|z| z.as_f64().unwrap())
            .collect();
        assert_eq!(zeros, expected);
    }
}

#[test]
fn sign_changing_zeros_round_trip() {
    let args = [
        "--family", "painleve", "--K", "1", "--A", "0.01", "--a0", "1", "--a1", "5",
    ];
    let json = run(&with(&["solve"], &with(&args, &["--format", "json"])));
    let csv_out = run(&with(&["solve"], &with(&args, &["--format", "csv"])));
    assert_eq!(json.code, 0);
    let records: Vec<Value> = serde_json::from_str(&json.stdout).unwrap();
    let classes: Vec<&str> = records.iter().map(|r| r["sign_class"].as_str().unwrap()).collect();
    assert_eq!(classes, ["negative", "sign_changing", "positive"]);
    let mut reader = csv::Reader::from_reader(csv_out.stdout.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let z: f64 = rows[1][7].parse().unwrap();
    assert_eq!(z, records[1]["zero_locations"][0].as_f64().unwrap());
}

#[test]
fn curve_rows_ascend_in_lambda() {
    let o = run(&with(
        &["curve"],
        &with(PAINLEVE_3, &["--format", "csv", "--samples", "32"]),
    ));
    assert_eq!(o.code, 0, "{}", o.stderr);
    let mut reader = csv::Reader::from_reader(o.stdout.as_bytes());
    assert_eq!(
        reader.headers().unwrap(),
        vec!["lambda", "T", "Tprime", "Tsecond", "status"]
    );
    let lambdas: Vec<f64> = reader.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert!(lambdas.len() > 32);
    assert!(lambdas.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn curve_json_has_domain_and_min() {
    let o = run(&with(&["curve"], &with(PAINLEVE_3, &["--samples", "16"])));
    assert_eq!(o.code, 0);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert!(v["domain"]["lambda0"].is_f64());
    assert!(v["a_min"]["a_min"].as_f64().unwrap() < 2.0);
    assert!(v["samples"].as_array().unwrap().len() > 16);
}

#[test]
fn verify_round_trip_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let sols = dir.path().join("sols.json");
    let sols_str = sols.to_str().unwrap();
    let o = run(&with(&["solve"], &with(PAINLEVE_3, &["-o", sols_str])));
    assert_eq!(o.code, 0);
    assert!(o.stdout.is_empty());

    let o = run(&with(&["verify"], &with(PAINLEVE_3, &["--solutions", sols_str])));
    assert_eq!(o.code, 0, "{}", o.stderr);
    let fresh: Vec<Value> = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(fresh.len(), 3);

    let mut records: Vec<Value> = serde_json::from_str(&fs::read_to_string(&sols).unwrap()).unwrap();
    let l = records[1]["lambda"].as_f64().unwrap();
    records[1]["lambda"] = Value::from(l + 1e-3);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&records).unwrap()).unwrap();
    let o = run(&with(
        &["verify"],
        &with(PAINLEVE_3, &["--solutions", bad.to_str().unwrap()]),
    ));
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("verification"));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env = Environment {
        output_dir: Some(dir.path().to_path_buf()),
    };
    let o = run_env(&["eigen", "--a0", "1", "--a1", "0.5", "--format", "csv"], &env);
    assert_eq!(o.code, 0);
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(dir.path().join("eigen.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let row = reader.records().next().unwrap().unwrap();
    assert!(row[0].parse::<f64>().unwrap().abs() <= 1e-9);
}

#[test]
fn problem_file_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    fs::write(&path, r#"{"family":"painleve","K":1.0,"A":1.0,"a0":1.0,"a1":1.0}"#).unwrap();
    let o = run(&["solve", "--problem", path.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Vec<Value> = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["sign_class"], "negative");
}

#[test]
fn custom_family_inline() {
    let o = run(&[
        "solve", "--family", "custom", "--g", "u^3 + u", "--p", "1", "--a0", "1", "--a1", "1",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Vec<Value> = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v.len(), 1);
}

#[test]
fn solve_writes_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let o = run(&[
        "solve",
        "--family",
        "painleve",
        "--K",
        "1",
        "--A",
        "1",
        "--a0",
        "1",
        "--a1",
        "1",
        "--certificate",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(v["solution_count"], 1);
    assert!(v["entries"].as_array().unwrap().iter().all(|e| e["consistent"] == true));
}

#[test]
fn sweep_csv_header_and_counts() {
    let o = run(&[
        "sweep", "--family", "painleve", "--K", "1", "--A", "0.5", "--a0", "1", "--a1", "1", "--axis", "a1",
        "--values", "0.5,3", "--format", "csv",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let mut reader = csv::Reader::from_reader(o.stdout.as_bytes());
    assert_eq!(
        reader.headers().unwrap(),
        vec!["param", "count", "n_neg", "n_sign", "n_pos", "lambda0", "a_min", "lambda1"]
    );
    let counts: Vec<usize> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(counts, [1, 3]);
}

#[test]
fn sweep_rejects_unordered_values() {
    let o = run(&[
        "sweep", "--family", "painleve", "--K", "1", "--A", "0.5", "--a0", "1", "--a1", "1", "--axis", "a1",
        "--values", "3,0.5",
    ]);
    assert_eq!(o.code, 1);
}

#[test]
fn probe_emits_one_json_block() {
    let o = run(&[
        "probe",
        "--family",
        "painleve",
        "--K",
        "1",
        "--A",
        "1",
        "--a0",
        "1",
        "--a1",
        "1",
        "--u-points",
        "256",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert!((v["lambda1"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    assert!(v["report"].is_object());
    assert!(v["h9"].is_object());
    assert_eq!(v["problem"]["family"], "painleve");
    let o = run(&[
        "probe", "--family", "painleve", "--K", "1", "--A", "1", "--a0", "1", "--a1", "1", "--format", "csv",
    ]);
    assert_eq!(o.code, 1);
}

#[test]
fn unwritable_output_is_numeric_class_failure() {
    struct Broken;
    impl std::io::Write for Broken {
        fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("closed"))
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }
    let mut err = Vec::new();
    let code = run_with(
        ["radshoot", "eigen", "--a0", "1", "--a1", "1"],
        &Environment::default(),
        &mut Broken,
        &mut err,
    );
    assert_eq!(code, 2);
}
