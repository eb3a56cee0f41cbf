use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coalguard_cli::commands::{parse_trace, replay};
use coalguard_cli::{load_scenario, LoadOptions};

fn bundled(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "scenarios", name].iter().collect()
}

fn coalguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coalguard")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_variant(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let text = std::fs::read_to_string(bundled("example1.toml")).unwrap();
    assert!(text.contains(from));
    let path = dir.join(name);
    std::fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn validate_bundled_scenarios() {
    for name in ["example1.toml", "xor.toml", "empty.toml", "greedy-gap.toml"] {
        let o = coalguard(&["validate", bundled(name).to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
    let o = coalguard(&["validate", bundled("example1.toml").to_str().unwrap()]);
    assert_eq!(stdout(&o), "ok: 5 agents, 9 variables, 4 formulas, 4 queued requests\n");
}

#[test]
fn doubly_owned_variable_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "double.toml", "a4 = [\"v4\", \"v5\"]", "a4 = [\"v4\", \"v5\", \"v3\"]");
    let o = coalguard(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DoublyOwned(v3)"), "{}", stderr(&o));
}

#[test]
fn insecure_start_needs_override() {
    let dir = tempfile::tempdir().unwrap();
    // v6 false makes phi2 true.
    let path = write_variant(dir.path(), "insecure.toml", "v6 = true", "v6 = false");
    let p = path.to_str().unwrap();
    let o = coalguard(&["validate", p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("InsecureStart"), "{}", stderr(&o));
    assert!(stderr(&o).contains("phi2"), "{}", stderr(&o));
    assert!(coalguard(&["validate", p, "--allow-insecure-start"]).status.success());
}

#[test]
fn queue_ownership_checked() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(
        dir.path(),
        "steal.toml",
        "agent = \"a2\"\nvar = \"v3\"",
        "agent = \"a2\"\nvar = \"v4\"",
    );
    let o = coalguard(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("queue entry 2"), "{}", stderr(&o));
}

#[test]
fn greedy_run_writes_replayable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let scenario = bundled("example1.toml");
    let o = coalguard(&[
        "run",
        scenario.to_str().unwrap(),
        "--ticks",
        "3",
        "--policy",
        "greedy",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("tick 1: blocked [a3, a1]; executed {v3<-false, v4<-false}; secure\n"));

    let records = parse_trace(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(records.len(), 3);
    let first = serde_json::to_value(&records[0]).unwrap();
    for key in ["tick", "batch", "iterations", "blocked", "executed", "valuation", "secure"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    let sc = load_scenario(&scenario, LoadOptions::default()).unwrap();
    assert_eq!(replay(&sc, &records), Ok(()));

    let mut tampered = records.clone();
    tampered[0].executed.pop();
    assert_eq!(replay(&sc, &tampered), Err(1));
}

#[test]
fn nondeterministic_run() {
    let o = coalguard(&[
        "run",
        bundled("example1.toml").to_str().unwrap(),
        "--ticks",
        "1",
        "--policy",
        "nondeterministic",
        "--seed",
        "7",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "tick 1: blocked [a1, a3]; executed {v3<-false, v4<-false}; secure\n");
}

#[test]
fn unguarded_run_exits_nonzero() {
    let o = coalguard(&["run", bundled("example1.toml").to_str().unwrap(), "--ticks", "1", "--policy", "none"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("INSECURE"));
}

#[test]
fn traces_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let traces: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let t = dir.path().join(format!("t{i}.jsonl"));
            let o = coalguard(&[
                "run",
                bundled("example1.toml").to_str().unwrap(),
                "--policy",
                "nondeterministic",
                "--seed",
                "11",
                "--trace",
                t.to_str().unwrap(),
            ]);
            assert!(o.status.success());
            std::fs::read(t).unwrap()
        })
        .collect();
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn analyze_xor() {
    let o = coalguard(&["analyze", bundled("xor.toml").to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("\nsecure set: disconnected; renamable Horn: yes (λ(A)=¬A, λ(B)=B)\n"), "{out}");
    assert!(out.contains("full graph: connected"));
}

#[test]
fn analyze_example1() {
    let o = coalguard(&["analyze", bundled("example1.toml").to_str().unwrap()]);
    let out = stdout(&o);
    assert!(out.contains("state graph: 9 variables, 512 vertices, 2304 edges"), "{out}");
    assert!(out.contains("full graph: connected"));
    assert!(out.contains("audit: {a3} -> phi2 with v2=true, v6=false"), "{out}");
}

#[test]
fn analyze_empty_formula_set() {
    let o = coalguard(&["analyze", bundled("empty.toml").to_str().unwrap()]);
    assert!(stdout(&o).contains("secure set = full graph; connected"));
}

#[test]
fn edge_list_export() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    let o = coalguard(&["analyze", bundled("xor.toml").to_str().unwrap(), "--edges", edges.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(edges).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.split(' ').count() == 3));
}

#[test]
fn bench_reports_slope() {
    let o = coalguard(&["bench", "--sizes", "4,8,16", "--repeats", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("log-log slope:"), "{out}");
    assert_eq!(out.lines().count(), 5);
}
