use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contagion")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).to_string_lossy().into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("contagion-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gen_single_edge() {
    let o = bin(&["--seed", "7", "gen", "--model", "config", "--n", "2", "--mu", "point:1"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout), "# n=2\n0 1\n");
}

#[test]
fn recursion_identity_on_unary_tree() {
    let o = bin(&["--seed", "1", "verify", "--identity", "recursion", "--instance", &data("unary1.json"), "--lambda", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn missing_seed_warns() {
    let o = bin(&["gen", "--model", "config", "--n", "2", "--mu", "point:1"]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("default seed"), "{err}");
    assert!(err.contains("\"seed_defaulted\":true"), "{err}");
}

#[test]
fn usage_and_domain_errors() {
    assert_eq!(bin(&["gen", "--no-such-flag"]).status.code(), Some(2));
    let o = bin(&["--seed", "1", "simulate", "--graph", "/nonexistent/graph.txt", "--lambda", "1", "--horizon", "5", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_is_byte_identical() {
    let run = |name: &str| {
        let out = tmp(name);
        let o = bin(&["--seed", "5", "sweep", "--spec", &data("tiny_sweep.json"), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.with_extension("csv.manifest.json").exists());
        std::fs::read(&out).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn simulate_writes_one_row_per_replica() {
    let g = tmp("k2.txt");
    std::fs::write(&g, "# n=2\n0 1\n").unwrap();
    let o = bin(&["--seed", "3", "simulate", "--graph", g.to_str().unwrap(), "--lambda", "1", "--horizon", "100", "--reps", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = String::from_utf8_lossy(&o.stdout);
    assert_eq!(s.lines().count(), 6, "{s}");
}
