use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

const TOY: &[&str] = &[
    "-w", "1/2,1/2", "--tau", "2", "--delta", "1/10", "-k", "2", "--r", "16/9", "--eps0", "1/1600", "--rho0", "1/2,1/2", "--xi", "2",
    "--n", "2,7", "--ni", "3,3;14,14",
];

const TOY_CONFIG: &str = "\
# toy construction
w = 1/2,1/2
tau = 2
delta = 1/10
k-max = 2
r = 16/9
eps0 = 1/1600
rho0 = 1/2,1/2
xi = 2
n = 2,7
ni = 3,3;14,14
";

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("exactapprox-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn raw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exactapprox")).args(args).env_remove("EXACTAPPROX_THREADS").output().unwrap()
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = raw(args);
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json)
}

fn toy_tree() -> &'static str {
    static TREE: OnceLock<String> = OnceLock::new();
    TREE.get_or_init(|| {
        let tree = scratch("toy4.json").to_string_lossy().into_owned();
        let mut args = vec!["build", "--depth", "4", "--tree", &tree];
        args.extend(TOY);
        let (code, rep) = run(&args);
        assert_eq!(code, 0, "{rep}");
        tree
    })
}

#[test]
fn dim_for_equal_weights() {
    let (code, rep) = run(&["dim", "-d", "2", "--tau", "2"]);
    assert_eq!(code, 0);
    assert_eq!(rep["value"], "3/2");
    assert_eq!(rep["schema"], "exactapprox.dim/1");
}

#[test]
fn dim_with_delta_reports_the_lower_bound() {
    let (code, rep) = run(&["dim", "-w", "1/5,4/5", "--tau", "3/2", "--delta", "1/100"]);
    assert_eq!(code, 0, "{rep}");
    let lb = &rep["lower_bound"];
    assert_eq!(lb["profile_matches_bound"], true);
    assert_eq!(lb["gap_within_tolerance"], true);
    assert_eq!(lb["profile_min"], lb["value"]);
}

#[test]
fn aux_weights_sum_to_one() {
    let (code, rep) = run(&["aux", "-w", "1/6,1/3,1/2", "--tau", "2", "--delta", "1/100"]);
    assert_eq!(code, 0, "{rep}");
    let total: f64 = rep["wtilde"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            let (n, d) = s.as_str().unwrap().split_once('/').unwrap_or((s.as_str().unwrap(), "1"));
            n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap()
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(rep["violations"], serde_json::json!([]));
}

#[test]
fn faithful_schedule_passes() {
    let (code, rep) = run(&["schedule", "-w", "1/3,2/3", "--tau", "3/2", "--delta", "1/100", "-k", "2"]);
    assert_eq!(code, 0);
    assert_eq!(rep["all_pass"], true);
}

#[test]
fn failing_schedule_exits_one_with_a_report() {
    let (code, rep) = run(&["schedule", "--toy", "-d", "2", "--tau", "2", "--delta", "1/10", "--r", "4", "--eps0", "1/2", "--n", "1"]);
    assert_eq!(code, 1);
    assert_eq!(rep["all_pass"], false);
    assert_eq!(rep["schema"], "exactapprox.schedule-run/1");
}

#[test]
fn usage_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["dim", "--bogus"],
        &["dim", "--tau", "2"],
        &["dim", "-d", "3", "-w", "1/2,1/2", "--tau", "2"],
        &["dim", "-w", "2/3,1/3", "--tau", "2"],
        &["dim", "-d", "2", "--tau", "1"],
        &["aux", "-d", "2", "--tau", "2", "--delta", "1/2"],
        &["schedule", "-d", "2", "--tau", "2", "--delta", "1/10", "--r", "2"],
        &["schedule", "--toy", "--faithful", "-d", "2", "--tau", "2", "--delta", "1/10"],
        &["verify", "--tree", "/nonexistent/tree.json"],
        &["dim", "-d", "2", "--tau", "two"],
    ];
    for args in cases {
        let out = raw(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn thread_count_must_be_positive() {
    let bin = env!("CARGO_BIN_EXE_exactapprox");
    let bad = Command::new(bin).args(["dim", "-d", "2", "--tau", "2"]).env("EXACTAPPROX_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let ok = Command::new(bin).args(["dim", "-d", "2", "--tau", "2"]).env("EXACTAPPROX_THREADS", "1").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn config_file_matches_explicit_flags() {
    let cfg = scratch("toy.cfg");
    std::fs::write(&cfg, TOY_CONFIG).unwrap();
    let cfg = cfg.to_string_lossy().into_owned();
    let mut explicit = vec!["schedule", "--toy"];
    explicit.extend(TOY);
    let a = raw(&explicit);
    let b = raw(&["schedule", "--toy", "--config", &cfg]);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);

    let (_, over) = run(&["schedule", "--toy", "--config", &cfg, "--delta", "1/20"]);
    assert_eq!(over["schedule"]["delta"], "1/20");

    let bad = scratch("bad.cfg");
    std::fs::write(&bad, "tau = 2\nwidth = 3\n").unwrap();
    let out = raw(&["dim", "--config", &bad.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn build_verify_analyze_pipeline() {
    let tree = toy_tree();
    let (code, rep) = run(&["verify", "--tree", tree, "--trial-boxes", "20"]);
    assert_eq!(code, 0, "{rep}");
    assert_eq!(rep["required_pass"], true);
    assert_eq!(rep["depth"], 4);

    let out = scratch("analyze.json");
    let csv = scratch("local.csv");
    let status = raw(&[
        "analyze", "--tree", tree, "--trial-boxes", "20", "--points", "300", "--csv", &csv.to_string_lossy(), "--out", &out.to_string_lossy(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    assert!(status.stdout.is_empty());
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep["local_dimension"]["all_bounds_hold"], true);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("box_id,ell,n,n_B,mu_bound,log_ell_mu,f_main_term,residual"));
    let rows = lines.count();
    assert_eq!(rows, rep["local_dimension"]["records"].as_array().unwrap().len());
    assert!(rows > 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tree = toy_tree();
    for args in [
        vec!["verify", "--tree", tree, "--trial-boxes", "10", "--seed", "7"],
        vec!["analyze", "--tree", tree, "--trial-boxes", "10", "--points", "200", "--seed", "7"],
        vec!["approx", "-x", "2/7,3/7", "-w", "1/3,2/3", "--tau", "3/2", "--c", "1", "--q-max", "30"],
    ] {
        let a = raw(&args);
        let b = raw(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let again = scratch("toy4-again.json");
    let mut args = vec!["build", "--depth", "4", "--tree"];
    let again_s = again.to_string_lossy().into_owned();
    args.push(&again_s);
    args.extend(TOY);
    assert_eq!(run(&args).0, 0);
    assert_eq!(std::fs::read(tree).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn approx_hits_every_multiple_of_the_denominator() {
    let (code, rep) = run(&["approx", "-x", "1/3,2/3", "-d", "2", "--tau", "2", "--c", "1/100", "--q-max", "12"]);
    assert_eq!(code, 0);
    let qs: Vec<u64> = rep["hits"].as_array().unwrap().iter().map(|h| h["q"].as_u64().unwrap()).collect();
    assert_eq!(qs, vec![3, 6, 9, 12]);
    assert_eq!(rep["period"], "3");
}

#[test]
fn oversized_build_fails_before_allocating() {
    let tree = scratch("faithful.json").to_string_lossy().into_owned();
    let (code, rep) = run(&["build", "--faithful", "-d", "2", "--tau", "2", "--delta", "1/10", "--depth", "1", "--tree", &tree]);
    assert_eq!(code, 1);
    assert_eq!(rep["schema"], "exactapprox.error/1");
    assert!(rep["error"].as_str().unwrap().contains("scale too large"), "{rep}");
}
