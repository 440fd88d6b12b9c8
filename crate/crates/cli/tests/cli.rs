use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgap"))
        .args(args)
        .env_remove("FG_SEED")
        .output()
        .expect("spawn fgap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn build_rep3(dir: &Path) -> String {
    let path = dir.join("rep3.dem");
    let p = path.to_str().unwrap().to_string();
    let o = fgap(&["build", "rep3", "--p", "0.1", "--out", &p]);
    assert!(o.status.success());
    p
}

#[test]
fn build_presets() {
    let o = fgap(&["build", "rep3", "--p", "0.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("error(")).count(), 3);
    assert!(text.contains("error(0.1) D0 L0"));

    let o = fgap(&["build", "bb72", "--p", "0.001"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let max = |prefix: char| {
        text.split_whitespace()
            .filter_map(|t| t.strip_prefix(prefix)?.parse::<usize>().ok())
            .max()
            .unwrap()
    };
    assert_eq!(text.lines().filter(|l| l.starts_with("error(")).count(), 72);
    assert_eq!(max('D') + 1, 36);
    assert_eq!(max('L') + 1, 12);
}

#[test]
fn build_errors() {
    assert_eq!(fgap(&["build", "rep7", "--p", "0.1"]).status.code(), Some(1));
    assert_eq!(fgap(&["build", "rep3", "--p", "0.7"]).status.code(), Some(2));
    assert_eq!(fgap(&["build", "bb72", "--p", "0.1", "--rounds", "2"]).status.code(), Some(2));
    assert_eq!(fgap(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn build_phenomenological_rounds() {
    let o = fgap(&["build", "rep3", "--p", "0.01", "--rounds", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("error(")).count(), 8);
}

#[test]
fn run_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let dem = build_rep3(dir.path());
    let out = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let o = fgap(&["run", "--dem", &dem, "--shots", "1000", "--seed", "7", "--workers", workers, "--out", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(path).unwrap()
    };
    let a = out("a.csv", "1");
    let b = out("b.csv", "1");
    let c = out("c.csv", "8");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1001);
}

#[test]
fn run_seed_from_env_and_configs() {
    let dir = tempfile::tempdir().unwrap();
    let dem = build_rep3(dir.path());
    let cfg = dir.path().join("base.cfg");
    fs::write(&cfg, "num_sets = 20\nstop_nconv = 5 # quota\n").unwrap();
    let run = |seed_env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fgap"));
        cmd.args(["run", "--dem", &dem, "--shots", "50"]).args(extra).env_remove("FG_SEED");
        if let Some(s) = seed_env {
            cmd.env("FG_SEED", s);
        }
        cmd.output().unwrap()
    };
    let env7 = run(Some("7"), &[]);
    let flag7 = run(None, &["--seed", "7"]);
    assert!(env7.status.success());
    assert_eq!(env7.stdout, flag7.stdout);
    assert_ne!(env7.stdout, run(None, &["--seed", "8"]).stdout);

    let ok = run(None, &["--baseline-config", cfg.to_str().unwrap(), "--forced-set", "num_sets=5"]);
    assert!(ok.status.success());
    let bad = run(None, &["--set", "gamma_min=0.9", "--set", "gamma_max=0.1"]);
    assert_eq!(bad.status.code(), Some(2));
    let bad_key = run(None, &["--set", "colour=blue"]);
    assert_eq!(bad_key.status.code(), Some(2));
}

#[test]
fn run_usage_errors() {
    let o = fgap(&["run", "--shots", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(fgap(&["run", "--dem", "/nonexistent/x.dem"]).status.code(), Some(2));
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let dem = build_rep3(dir.path());
    let records = dir.path().join("r.csv");
    let r = records.to_str().unwrap();
    assert!(fgap(&["run", "--dem", &dem, "--shots", "400", "--seed", "3", "--out", r]).status.success());

    let o = fgap(&["sweep", "--records", r, "--thresholds", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "T,ps_rate,ler,ler_per_round,ci_low,ci_high,n_accepted");
    assert!(lines[1].starts_with("0.0,0.0,"));

    let csv_path = dir.path().join("curve.csv");
    let svg_path = dir.path().join("curve.svg");
    let o = fgap(&[
        "sweep", "--records", r, "--thresholds", "0,1,inf", "--rounds", "3",
        "--out", csv_path.to_str().unwrap(), "--svg", svg_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let curve = fs::read_to_string(&csv_path).unwrap();
    assert!(curve.lines().last().unwrap().starts_with("inf,"));
    assert!(fs::read_to_string(&svg_path).unwrap().starts_with("<svg"));

    let plain = fgap(&["sweep", "--records", r, "--thresholds", "0,1,inf", "--rounds", "3"]);
    assert_eq!(stdout(&plain), curve);

    let json = fgap(&["sweep", "--records", r, "--thresholds", "0,inf", "--json"]);
    assert!(stdout(&json).contains("\"T\": \"inf\""));
}

#[test]
fn sweep_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "shot,seed,gap,erasure,success,forced_converged,true_class,decoded_class\n").unwrap();
    let e = empty.to_str().unwrap();
    assert_eq!(fgap(&["sweep", "--records", e]).status.code(), Some(2));
    assert_eq!(fgap(&["sweep", "--records", e, "--thresholds", "0,abc"]).status.code(), Some(1));
    assert_eq!(fgap(&["sweep", "--records", e, "--thresholds", "2,1"]).status.code(), Some(1));
}

#[test]
fn oracle_reports() {
    let dir = tempfile::tempdir().unwrap();
    let dem = build_rep3(dir.path());
    let o = fgap(&["oracle", "--dem", &dem, "--syndrome", "10", "--check-reduction"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let field = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field("exact_gap") - 9f64.ln()).abs() < 1e-9);
    assert!(field("difference") <= 1e-9);
    assert!(text.contains("mld_class = 1"));

    let o = fgap(&["oracle", "--dem", &dem, "--exhaustive-shots", "200", "--seed", "1", "--check-reduction"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("shots = 200"));
}

#[test]
fn oracle_errors() {
    let dir = tempfile::tempdir().unwrap();
    let dem = dir.path().join("bad.dem");
    fs::write(&dem, "error(0.1) D0 D1\nerror(0.1) D0 D1 L0\n").unwrap();
    let d = dem.to_str().unwrap();
    let o = fgap(&["oracle", "--dem", d, "--syndrome", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let big = dir.path().join("big.dem");
    let out = fgap(&["build", "bb72", "--p", "0.01", "--out", big.to_str().unwrap()]);
    assert!(out.status.success());
    let zeros = "0".repeat(36);
    let o = fgap(&["oracle", "--dem", big.to_str().unwrap(), "--syndrome", &zeros]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fgap(&["oracle", "--dem", d]).status.code(), Some(1));
}
