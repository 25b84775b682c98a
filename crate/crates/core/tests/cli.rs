use std::process::{Command, Output};

use qdsim::experiments::{round_sig, ProtocolScript, ResultDocument};

fn qdsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = qdsim(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    qdsim(args).status.code().unwrap()
}

const MAGNETIC: &str = "\
group = s3
lattice = 2 3
boundary = open
mode = sample
seed = 11
---
prepare-gs paper-correction
magnetic-pair c+ f[0,0] f[0,1]
fuse-magnetic f[0,0] f[0,1] c+
stabilizers
";

#[test]
fn same_arguments_give_identical_bytes() {
    let args = ["run", "s3-interfere", "--mode", "sample", "--seed", "7"];
    assert_eq!(stdout(&args), stdout(&args));
    let a = stdout(&["run", "reference-phase", "--jobs", "1"]);
    let b = stdout(&["run", "reference-phase", "--jobs", "4"]);
    assert_eq!(a, b);
}

#[test]
fn experiments_report_expected_values() {
    let doc = ResultDocument::from_json(&stdout(&["run", "toric-fig3"])).unwrap();
    assert_eq!(doc.summary["A2.p_minus"], 1.0);
    assert_eq!(doc.summary["A2.phase"], round_sig(std::f64::consts::PI));
    let doc = ResultDocument::from_json(&stdout(&["run", "s3-interfere", "--h", "e,t1"])).unwrap();
    assert_eq!(doc.summary["e.contrast"], 1.0);
    assert_eq!(doc.summary["t1.contrast"], 0.0);
    assert!(!doc.summary.contains_key("c+.contrast"));
    let doc =
        ResultDocument::from_json(&stdout(&["run", "prepare-gs", "--group", "z2", "--lattice", "3", "3"])).unwrap();
    assert_eq!(doc.summary["oracle.overlap"], 1.0);
    assert_eq!(doc.stabilizers.len(), 9 + 4);
}

#[test]
fn script_runs_and_echoes_itself() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("pair.qd");
    let out = dir.path().join("pair.json");
    std::fs::write(&script, MAGNETIC).unwrap();
    let args = ["script", script.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(code(&args), 0);
    let first = std::fs::read_to_string(&out).unwrap();
    let doc = ResultDocument::from_json(&first).unwrap();
    assert_eq!(doc.script, Some(ProtocolScript::parse(MAGNETIC).unwrap()));
    assert_eq!(doc.distributions["L9.fusion"]["vacuum"], 1.0);
    assert_eq!(doc.engine.seed, Some(11));
    assert!(doc.log.iter().any(|e| e.op == "magnetic-pair"));
    assert_eq!(code(&args), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn csv_summary_format() {
    let text = stdout(&["run", "electric-fusion", "--format", "csv-summary"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    assert!(text.contains("fusion.R2,1.0\n"));
    assert!(text.contains("survival,1.0\n"));
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(code(&["run", "no-such-experiment"]), 2);
    assert_eq!(code(&["run", "prepare-gs", "--group", "s4"]), 2);
    assert_eq!(code(&["run", "prepare-gs", "--mode", "sample"]), 2);
    assert_eq!(code(&["run", "toric-fig3", "--group", "s3"]), 2);
    assert_eq!(code(&["run", "prepare-gs", "--lattice", "1", "1"]), 2);
    assert_eq!(code(&["run", "prepare-gs", "--format", "xml"]), 2);
    assert_eq!(code(&["script", "/nonexistent/script.qd"]), 2);

    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("bad.qd");
    std::fs::write(&script, MAGNETIC.replace("f[0,1] c+", "f[0,9] c+")).unwrap();
    let out = qdsim(&["script", script.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 9") && err.contains("f[0,9]"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn simulation_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("orphan.qd");
    std::fs::write(
        &script,
        "group = s3\nlattice = 2 2\n---\nprepare-gs\nfuse-electric v[0,0] v[0,1]\n",
    )
    .unwrap();
    assert_eq!(code(&["script", script.to_str().unwrap()]), 3);
}
