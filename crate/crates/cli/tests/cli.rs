use std::path::Path;
use std::process::{Command, Output};

fn anonq(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_anonq"));
    cmd.args(args).env_remove("ANONQ_OUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("ANONQ_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_csv_and_json_to_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = anonq(&["run", "--experiment", "guess_bound", "--k", "3,4"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("guess_bound.csv")).unwrap();
    assert!(csv.starts_with("experiment,point,n,k,S,epsilon,delta,param,trials,estimate,ci_low,ci_high,bound,relation,verdict"));
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(dir.path().join("guess_bound.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment":"theorem1","n":3,"k":2,"S":8,"epsilon":0.6,"delta":0.05,"trials":100}"#).unwrap();
    let out = dir.path().join("out");
    let o = anonq(
        &["run", "--config", cfg.to_str().unwrap(), "--S", "10", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("theorem1.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("theorem1,0,3,2,10,0.6,0.05,c_epsilon,100,"), "{row}");
}

#[test]
fn bad_values_exit_two_naming_the_field() {
    let o = anonq(&["run", "--experiment", "theorem1", "--epsilon", "1.5"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("epsilon"));
    let o = anonq(&["run"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("theorem1") && stderr(&o).contains("full_run"));
    let o = anonq(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn summarize_exit_status_follows_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = anonq(&["run", "--experiment", "guess_bound", "--k", "3"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json = dir.path().join("guess_bound.json");
    let o = anonq(&["summarize", json.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 violations"));

    let text = std::fs::read_to_string(&json).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replacen("\"verdict\": \"pass\"", "\"verdict\": \"fail\"", 1)).unwrap();
    let o = anonq(&["summarize", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));

    let empty = dir.path().join("empty.json");
    let stripped = text.split("\"rows\": [").next().unwrap().to_string() + "\"rows\": []\n}\n";
    std::fs::write(&empty, stripped).unwrap();
    let o = anonq(&["summarize", empty.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.jsonl");
    let args = ["replay", "--n", "4", "--k", "3", "--S", "3", "--seed", "9", "--out"];
    let mut a: Vec<&str> = args.to_vec();
    a.push(first.to_str().unwrap());
    let o = anonq(&a, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&first).unwrap();
    assert!(text.lines().count() > 10);

    let second = dir.path().join("b.jsonl");
    let mut b: Vec<&str> = args.to_vec();
    b.extend([second.to_str().unwrap(), "--check", first.to_str().unwrap()]);
    let o = anonq(&b, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("matches"));

    let other = dir.path().join("c.jsonl");
    let o = anonq(
        &["replay", "--n", "4", "--S", "3", "--seed", "10", "--out", other.to_str().unwrap(), "--check", first.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
}
