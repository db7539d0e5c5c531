use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coherence"));
    c.env_remove("ROC_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name).display().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p: PathBuf = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const PLUS: &str = r#"{"dim": 2, "re": [[0.5, 0.5], [0.5, 0.5]], "im": [[0, 0], [0, 0]]}"#;
const DIAGONAL: &str = r#"{"dim": 3, "re": [[0.5, 0, 0], [0, 0.3, 0], [0, 0, 0.2]], "im": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]}"#;
// arg rho_01 = arg rho_12 = 0, arg rho_02 = pi/2: no aligning phases
const TWISTED: &str = r#"{"dim": 3, "re": [[0.3333333333333333, 0.1, 0], [0.1, 0.3333333333333334, 0.1], [0, 0.1, 0.3333333333333333]], "im": [[0, 0, 0.1], [0, 0, 0], [-0.1, 0, 0]]}"#;

#[test]
fn roc_of_maximally_coherent_fixture() {
    let o = run(&["roc", &fixture("maximally_coherent_d4.json")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "3.000000\n");
}

#[test]
fn roc_json_and_certificate() {
    let o = run(&["--json", "roc", &fixture("roc_qutrit_seed11.json"), "--certificate"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["method"], "SDP");
    for key in ["witness", "delta_star", "tau_star", "gap", "value"] {
        assert!(v["certificate"].get(key).is_some(), "{key}");
    }
}

#[test]
fn fast_path_only() {
    let dir = TempDir::new().unwrap();
    let twisted = write(&dir, "t.json", TWISTED);
    let o = run(&["roc", &twisted, "--fast-path-only"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "fast path not applicable\n");
    let plus = write(&dir, "p.json", PLUS);
    assert_eq!(stdout(&run(&["roc", &plus, "--fast-path-only"])), "1.000000\n");
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"dim\": 2,\n \"re\": [[1, 0], [0, 0]]\n \"im\": []}");
    let o = run(&["roc", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["roc"]).status.code(), Some(1));
    assert_eq!(run(&["--tol", "1e-12", "roc", &fixture("maximally_coherent_d4.json")]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bounds_report() {
    let o = run(&["--json", "bounds", &fixture("gap_witness_d3.json")]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["violations"].as_array().unwrap().is_empty());
    let exact = v["exact"].as_f64().unwrap();
    assert!(v["l1_upper"].as_f64().unwrap() - exact > 1e-4);
    let human = stdout(&run(&["bounds", &fixture("gap_witness_d3.json")]));
    assert!(human.ends_with("chain holds\n"));
}

#[test]
fn witness_bound_and_invalid_witness() {
    let dir = TempDir::new().unwrap();
    let plus = write(&dir, "p.json", PLUS);
    // W = 1 - 2|+><+| has zero diagonal and W <= 1
    let good = write(&dir, "w.json", r#"{"dim": 2, "re": [[0, -1], [-1, 0]], "im": [[0, 0], [0, 0]]}"#);
    let o = run(&["witness-bound", &plus, &good]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1.000000\n");
    let bad = write(&dir, "b.json", r#"{"dim": 2, "re": [[-1, 0], [0, 0]], "im": [[0, 0], [0, 0]]}"#);
    let o = run(&["witness-bound", &plus, &bad]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn data_commands() {
    let dir = TempDir::new().unwrap();
    let x = r#"{"dim": 2, "re": [[0, 1], [1, 0]], "im": [[0, 0], [0, 0]]}"#;
    let ok = write(&dir, "ok.json", &format!(r#"{{"dim": 2, "observables": [{x}], "expectations": [1.0]}}"#));
    assert_eq!(stdout(&run(&["min-roc-from-data", &ok])), "1.000000\n");
    let o = run(&["--json", "witness-from-data", &ok]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["bound"].as_f64().unwrap() - 1.0).abs() < 1e-7);
    let bad = write(&dir, "bad.json", &format!(r#"{{"dim": 2, "observables": [{x}], "expectations": [2.0]}}"#));
    assert_eq!(run(&["min-roc-from-data", &bad]).status.code(), Some(4));
    assert_eq!(run(&["witness-from-data", &bad]).status.code(), Some(4));
}

#[test]
fn game_command() {
    let dir = TempDir::new().unwrap();
    let plus = write(&dir, "p.json", PLUS);
    let game = write(
        &dir,
        "g.json",
        r#"{"dim": 2, "type": "phase", "entries": [{"prior": 0.5, "phase": 0.0}, {"prior": 0.5, "phase": 3.141592653589793}]}"#,
    );
    let o = run(&["game", &game, &plus]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "p_succ   1.000000\nbaseline 0.500000\nratio    2.000000\n");
    let diag = write(&dir, "d.json", DIAGONAL);
    assert_eq!(run(&["game", &game, &diag]).status.code(), Some(1));
}

#[test]
fn verify_teo_on_diagonal_state() {
    let dir = TempDir::new().unwrap();
    let diag = write(&dir, "d.json", DIAGONAL);
    let o = run(&["verify-teo", &diag, "--phase-games", "3", "--channel-games", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("ratio              1.000000"));
}

#[test]
fn sweep_qubit_reproduces_the_bloch_relation() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&["sweep-qubit", "--steps", "11", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r1,r2,r3,roc,l1"));
    assert!(csv.contains("\n0.600000,0.000000,0.200000,0.600000,0.600000\n"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[3] - (v[0] * v[0] + v[1] * v[1]).sqrt()).abs() < 2e-6, "{line}");
    }
}

#[test]
fn audit_passes_and_is_byte_stable() {
    let a = run(&["--json", "audit", "--dim", "2", "--samples", "3", "--seed", "5"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 5);
    let b = run(&["--json", "audit", "--dim", "2", "--samples", "3", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn roc_seed_environment_variable() {
    let o = bin().env("ROC_SEED", "17").args(["--json", "audit", "--dim", "2", "--samples", "1"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 17);
}
