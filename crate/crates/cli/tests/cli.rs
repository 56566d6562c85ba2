use std::process::{Command, Output};

use serde_json::Value;

fn mvgeg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvgeg")).args(args).env_remove("MVGEG_PRECISION").output().unwrap()
}

fn json_of(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(num).collect()).collect()
}

#[test]
fn eval_degree_zero_is_identity() {
    let v = json_of(&mvgeg(&["eval", "--ell", "1/2", "--nu", "1", "--n", "0"]));
    let coeffs = v["routes"][0]["P_n"]["coeffs"].as_array().unwrap();
    assert_eq!(coeffs.len(), 1);
    assert_eq!(matrix(&coeffs[0]), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
}

#[test]
fn weight_mode_at_one() {
    for (ell, nu, two_ell) in [("1/2", 1.0, 1.0), ("3/2", 0.7, 3.0), ("2", 2.5, 4.0)] {
        let v = json_of(&mvgeg(&["eval", "--x", "1", "--n", "0", "--ell", ell, "--nu", &nu.to_string()]));
        for row in matrix(&v["W_pol"]) {
            for e in row {
                assert!((e - (two_ell + nu)).abs() < 1e-12 * (two_ell + nu), "ℓ={ell}: {e}");
            }
        }
    }
}

#[test]
fn two_routes_print_identical_blocks() {
    let v = json_of(&mvgeg(&["eval", "--ell", "1", "--nu", "2", "--n", "3", "--route", "recurrence,racah"]));
    let r = v["routes"].as_array().unwrap();
    assert_eq!(r.len(), 2);
    let (a, b) = (r[0]["P_n"]["coeffs"].as_array().unwrap(), r[1]["P_n"]["coeffs"].as_array().unwrap());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        for (rx, ry) in matrix(x).iter().zip(matrix(y)) {
            for (p, q) in rx.iter().zip(ry) {
                assert!((p - q).abs() <= 1e-9, "{p} vs {q}");
            }
        }
    }
    assert!(num(&v["max_route_gap"]) <= 1e-9);
}

#[test]
fn all_routes_at_a_point() {
    let v = json_of(&mvgeg(&[
        "eval",
        "--ell",
        "3/2",
        "--nu",
        "1.3",
        "--n",
        "4",
        "--route",
        "recurrence,hyper,racah",
        "--x",
        "0.4",
    ]));
    let vals: Vec<_> = v["routes"].as_array().unwrap().iter().map(|r| matrix(&r["P_n"])).collect();
    for m in &vals[1..] {
        for (ra, rb) in vals[0].iter().zip(m) {
            for (p, q) in ra.iter().zip(rb) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn negative_nu_is_a_usage_error() {
    for args in [&["verify", "--nu", "-1"][..], &["eval", "--nu", "-1"], &["eval", "--nu", "0"]] {
        let o = mvgeg(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("positive definite"));
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["eval", "--ell", "0.3"][..],
        &["eval", "--ell", "-1"],
        &["eval", "--route", "fast"],
        &["verify", "--suite", "bogus"],
        &["verify", "--tol", "-1"],
        &["eval", "--bogus"],
        &["frobnicate"],
        &["--format", "xml", "eval"],
        &["--config", "/nonexistent.json", "eval"],
    ] {
        assert_eq!(mvgeg(args).status.code(), Some(2), "{args:?}");
    }
    let o = Command::new(env!("CARGO_BIN_EXE_mvgeg")).args(["eval"]).env("MVGEG_PRECISION", "half").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_weight_passes() {
    let o = mvgeg(&["verify", "--suite", "weight", "--ell-max", "2"]);
    let v = json_of(&o);
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(v["reports"][0]["suite"], "weight");
}

#[test]
fn verify_all_passes_and_is_deterministic() {
    let a = mvgeg(&["verify", "--suite", "all", "--ell-max", "3/2", "--n-max", "6", "--seed", "11", "--threads", "1"]);
    let b = mvgeg(&["verify", "--suite", "all", "--ell-max", "3/2", "--n-max", "6", "--seed", "11", "--threads", "4"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert_eq!(v["reports"].as_array().unwrap().len(), 5);
    let ops = v["operators"].as_array().unwrap();
    assert_eq!(ops.len(), 3 * 4);
    assert!(ops[0]["D"]["A2"]["coeffs"].is_array());
}

#[test]
fn verify_failure_exits_one() {
    let o = mvgeg(&["verify", "--suite", "weight", "--ell-max", "1", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_of_any(&o)["pass"], Value::Bool(false));
}

fn json_of_any(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn weight_emits_factors() {
    let v = json_of(&mvgeg(&["weight", "--ell", "3/2", "--nu", "0.8"]));
    assert_eq!(v["W_pol"]["dim"], 4);
    assert_eq!(v["tdiag"].as_array().unwrap().len(), 4);
    assert!(v["tdiag"].as_array().unwrap().iter().all(|t| num(t) > 0.0));
    let l0 = matrix(&v["L"]["coeffs"][0]);
    for (i, row) in l0.iter().enumerate() {
        assert_eq!(row[i], 1.0);
        assert!(row[i + 1..].iter().all(|&e| e == 0.0));
    }
}

#[test]
fn table_norms_are_positive_diagonal() {
    let v = json_of(&mvgeg(&["table", "--ell", "1", "--nu", "1.5", "--n-max", "3"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let h = matrix(&r["H_n"]);
        for (i, row) in h.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert!(if i == j { e > 0.0 } else { e == 0.0 });
            }
        }
    }
}

#[test]
fn csv_uses_twelve_digits() {
    let o = mvgeg(&["--format", "csv", "eval", "--ell", "1/2", "--nu", "2.3", "--n", "2"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("route,power,row,col,value"));
    let val = lines.next().unwrap().rsplit(',').next().unwrap();
    let mantissa = val.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 12, "{val}");
}

#[test]
fn json_uses_seventeen_digits() {
    let o = mvgeg(&["eval", "--ell", "1/2", "--nu", "2.3", "--n", "0"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("2.2999999999999998e"), "{text}");
}

#[test]
fn extended_precision_backend() {
    let o = Command::new(env!("CARGO_BIN_EXE_mvgeg"))
        .args(["eval", "--ell", "1", "--nu", "1", "--n", "1"])
        .env("MVGEG_PRECISION", "extended")
        .output()
        .unwrap();
    let v = json_of(&o);
    assert_eq!(v["precision"], "extended");
    // 1/3 shows well past double precision
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("3333333333333333333333333333333"), "{text}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = std::env::temp_dir().join(format!("mvgeg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"ell": "3/2", "nu": 2, "nMax": 2, "outputFormat": "json"}"#).unwrap();
    let v = json_of(&mvgeg(&["--config", cfg.to_str().unwrap(), "eval"]));
    assert_eq!(v["ell"], "3/2");
    assert_eq!(v["n"], 2);
    let v = json_of(&mvgeg(&["--config", cfg.to_str().unwrap(), "eval", "--ell", "1", "--n", "1"]));
    assert_eq!((v["ell"].as_str(), v["n"].as_u64()), (Some("1"), Some(1)));
    assert_eq!(num(&v["nu"]), 2.0);
    let out = dir.join("out.json");
    let o = mvgeg(&["--out", out.to_str().unwrap(), "weight", "--ell", "1"]);
    assert!(o.status.success() && o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["W_pol"]["dim"], 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bench_rows_and_linear_recurrence() {
    let o = mvgeg(&["--format", "csv", "bench", "--ell-max", "1", "--n-max", "4", "--reps", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "route,d,n,median_s,reps");
    // routes × d ∈ {2, 3} × n ∈ {1, 2, 4}
    assert_eq!(rows.len() - 1, 3 * 2 * 3);
    let mut keys: Vec<_> = rows[1..].iter().map(|r| r.split(',').take(3).collect::<Vec<_>>().join(",")).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 18);

    let o = mvgeg(&[
        "--format",
        "csv",
        "bench",
        "--ell-max",
        "3/2",
        "--n-max",
        "256",
        "--reps",
        "9",
        "--route",
        "recurrence",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    let per_n: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[1] == "4" && f[2].parse::<usize>().unwrap() >= 16)
        .map(|f| f[3].parse::<f64>().unwrap() / f[2].parse::<f64>().unwrap())
        .collect();
    let spread = per_n.iter().cloned().fold(0.0, f64::max) / per_n.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 3.0, "time/n spread {spread}: {per_n:?}");
}
