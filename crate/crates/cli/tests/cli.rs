use std::process::{Command, Output};

use serde_json::Value;

fn mlv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlv")).args(args).output().expect("spawn mlv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn harmonic_sum_at_three() {
    let o = mlv(&["harmonic", "--m", "3", "--word", "1;1", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "3  1;1  3/2\n");
}

#[test]
fn harmonic_value_table() {
    let o = mlv(&["harmonic", "--c", "2", "--word", "1,1;1,-1", "--primes-up-to", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(lines.next().unwrap(), "index,word,value,valuation");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0], "3,\"1,1;1,-1\",-9/2,2");
    for row in rows {
        let v: i64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v >= 2);
    }
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(mlv(&["harmonic", "--m", "3", "--word", "1;z^5"]).status.code(), Some(2));
    assert_eq!(mlv(&["ldirect", "--p", "2", "--n", "1"]).status.code(), Some(2));
    assert_eq!(mlv(&["ldirect", "--p", "9", "--n", "1"]).status.code(), Some(2));
    assert_eq!(mlv(&["ldirect", "--p", "3", "--c", "3", "--n", "1"]).status.code(), Some(2));
    assert_eq!(mlv(&["lseries", "--p", "5", "--n", "0"]).status.code(), Some(2));
    assert_eq!(mlv(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn guards_exit_with_three() {
    let o = mlv(&["ldirect", "--p", "5", "--n", "1", "--M-max", "12"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("feasibility guard"));
    let o = mlv(&["lseries", "--p", "5", "--n", "1,1", "--L-max", "1", "--target-val", "8"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ldirect_reports_stabilization() {
    let o = mlv(&["ldirect", "--p", "5", "--c", "2", "--n", "1", "--M-max", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["config"]["m_max"], 4);
    let rec = &v["records"][0];
    assert_eq!(rec["monotone"], true);
    assert_eq!(rec["record"]["side"], "direct");
    assert_eq!(rec["record"]["m_max"], 4);
    let stable = rec["stable_digits"].as_array().unwrap();
    assert_eq!(stable.len(), 3);
}

#[test]
fn lseries_reports_truncation() {
    let o = mlv(&["lseries", "--p", "5", "--c", "2", "--n", "1", "--target-val", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let rec = &v["records"][0];
    assert_eq!(rec["side"], "series");
    assert!(rec["guaranteed_precision"].as_i64().unwrap() >= 5);
    assert!(rec["l_max"].as_u64().is_some());
    assert_eq!(rec["digits"][0].as_array().unwrap().len() as i64, 5 - rec["valuation"].as_i64().unwrap());
}

#[test]
fn compare_matches_digits() {
    let o = mlv(&["compare", "--p", "5", "--c", "2", "--n", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let row = &v["records"][0];
    assert!(row["matched"].as_i64().unwrap() >= row["required"].as_i64().unwrap());
    assert_eq!(row["required"], 4);
}

#[test]
fn output_is_deterministic_across_strategies() {
    let args = ["compare", "--p", "3,7", "--c", "2", "--n", "1,1", "--format", "text"];
    let a = mlv(&[&args[..], &["--strategy", "parallel"]].concat());
    let b = mlv(&[&args[..], &["--strategy", "parallel"]].concat());
    let c = mlv(&[&args[..], &["--strategy", "sequential"]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn flags_override_config_file() {
    let dir = std::env::temp_dir().join(format!("mlv-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    std::fs::write(&path, "c = 3\nprimes = [5]\nn = [2]\ntarget_valuation = 6\n").unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = json(&mlv(&["--config", cfg, "lseries"]));
    assert_eq!(from_file["config"]["c"], 3);
    assert_eq!(from_file["config"]["target_valuation"], 6);
    let flagged = json(&mlv(&["--config", cfg, "lseries", "--c", "4", "--target-val", "4"]));
    assert_eq!(flagged["config"]["c"], 4);
    assert_eq!(flagged["config"]["n"][0], 2);
    assert_eq!(flagged["records"][0]["c"], 4);
    std::fs::write(&path, "colour = 3\n").unwrap();
    assert_eq!(mlv(&["--config", cfg, "lseries"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_bijection_counts() {
    let o = mlv(&["verify", "--suite", "bijection", "--r", "3", "--p", "5", "--M", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    let suite = &v["suites"][0];
    assert_eq!(suite["name"], "bijection");
    assert_eq!(suite["details"][0], "r=3 p=5 M=2: |D|=8000 |union|=8000");
}

#[test]
fn verify_central_depth_two() {
    let o = mlv(&["verify", "--suite", "central", "--r", "2", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS central (6 checks)"));
}
