use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[grid]
n = 1
M = 8
L = 6.283185307179586
m = 1.0
s = 1.0

[nonlinearity]
lambda = 0.05
monomials = [{ coefficient = 1.0, powers = [2, 0, 0] }]

[solver]
dt = 0.02
scheme = "duhamel-picard"

[series]
capP = 3
order = 2
nodes = 8

[experiment]
T = 0.5
times = [0.0, 0.25, 0.5]
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_kgfock"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

#[test]
fn selftest_passes() {
    let out = Command::new(env!("CARGO_BIN_EXE_kgfock")).arg("selftest").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("nodes = 8", "nodes = 8\nnode = 3");
    let out = run(dir.path(), &bad, &["conserve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("node"));
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [SMALL.replace("dt = 0.02", "dt = 0.0"), SMALL.replace("times = [0.0, 0.25, 0.5]", "times = [0.5, 0.25]")] {
        assert_eq!(run(dir.path(), &bad, &["simulate"]).status.code(), Some(2));
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_kgfock")).arg("conserve").output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn blowup_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let hot = SMALL.replace("lambda = 0.05", "lambda = 2000.0").replace("T = 0.5", "T = 5.0");
    let out = run(dir.path(), &hot, &["simulate", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn certify_reproduces_riccati_blowup() {
    let dir = tempfile::tempdir().unwrap();
    let a = 0.4;
    let cfg = format!("{SMALL}\n[majorant]\ncoeffs = [0.0, 0.0, {a}]\n");
    let out = run(dir.path(), &cfg, &["certify"]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/certify.json")).unwrap()).unwrap();
    let kappa = report["kappa"].as_f64().unwrap();
    let theta = report["theta"].as_f64().unwrap();
    assert!((theta - 1.0 / (a * kappa)).abs() <= 1e-8);
    let e = report["e_tX_kappa"].as_f64().unwrap();
    let t = report["t"].as_f64().unwrap();
    assert!((e - kappa / (1.0 - a * t * kappa)).abs() <= 1e-10);
    assert_eq!(report["ok"], true);
}

#[test]
fn conserve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(dir.path(), SMALL, &["conserve", "--seed", "7", "--plot"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let csv = fs::read(dir.path().join("out/drift.csv")).unwrap();
    assert!(dir.path().join("out/plot_drift.py").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/conserve.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["grid"]["M"], 8);
    assert!(summary["max_rel_drift"].as_f64().unwrap() <= 1e-3);
    let text = String::from_utf8(csv.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,F_t,I_0,abs_drift,rel_drift,certified,truncation_mass");
    assert_eq!(text.lines().count(), 4);
    let again = run(dir.path(), SMALL, &["conserve", "--seed", "7"]);
    assert!(again.status.success());
    assert_eq!(fs::read(dir.path().join("out/drift.csv")).unwrap(), csv);
}

#[test]
fn trees_writes_diagrams() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), SMALL, &["trees"]);
    assert!(out.status.success());
    let trees: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/trees.json")).unwrap()).unwrap();
    // one shape per order up to 2 for a quadratic vertex
    assert_eq!(trees.len(), 3);
    assert_eq!(trees[2]["symmetry"], 2.0);
    assert!(fs::read_to_string(dir.path().join("out/trees.txt")).unwrap().contains("order 2"));
}

#[test]
fn simulate_and_recover_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), SMALL, &["simulate"]).status.success());
    let sim: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/simulate.json")).unwrap()).unwrap();
    assert!(sim["max_pair_norm"].as_f64().unwrap() > 0.0);
    assert!(sim["majorant_envelope"].as_f64().is_some());
    for f in ["path.bin", "path.json", "simulate.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let delta = SMALL.replace("T = 0.5", "T = 0.5\nphi = \"delta-u\"\nx = [1.0, 0.0]");
    assert!(run(dir.path(), &delta, &["recover"]).status.success());
    let rec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/recover.json")).unwrap()).unwrap();
    assert!(rec["recovery"]["rel_err_u"].as_f64().unwrap() <= 5e-3);
    assert!(rec["resolution"]["rel_err_u"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn shipped_config_parses() {
    let dir = tempfile::tempdir().unwrap();
    let desk = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk.toml")).unwrap();
    let out = run(dir.path(), &desk, &["certify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
