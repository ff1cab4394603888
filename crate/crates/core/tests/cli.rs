mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use contestable::cli::{run, EXIT_INCONCLUSIVE, EXIT_INTEGRITY, EXIT_NON_COMPLIANT, EXIT_OK, EXIT_USAGE};
use contestable::trace::{proposal_line, read_trace, ProposedEvent};
use contestable::Value;

use common::*;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str], stdin: &str) -> Out {
    let argv: Vec<&str> = std::iter::once("contestable").chain(args.iter().copied()).collect();
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let code = run(argv, &mut stdin.as_bytes(), &mut stdout, &mut stderr);
    Out {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn contract() -> PathBuf {
    fixtures().join("lufthansa.contract")
}

/// Simulates a fixture config into `dir`, returning the trace and history paths.
fn simulate(dir: &Path, cfg: &str) -> (PathBuf, PathBuf) {
    let trace = dir.join(format!("{cfg}.trace"));
    let history = dir.join(format!("{cfg}.csv"));
    let o = cli(
        &[
            "simulate",
            s(&fixtures().join(format!("{cfg}.cfg"))),
            "--out-trace",
            s(&trace),
            "--out-history",
            s(&history),
        ],
        "",
    );
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    (trace, history)
}

fn last_seq(trace: &Path) -> String {
    (read_trace(fs::File::open(trace).unwrap()).unwrap().len() - 1).to_string()
}

#[test]
fn check_exit_codes() {
    assert_eq!(cli(&["check", s(&contract())], "").code, EXIT_OK);
    assert_eq!(cli(&["check", "does/not/exist.contract"], "").code, EXIT_USAGE);
    let dup = cli(&["check", s(&fixtures().join("duplicate_norm.contract"))], "");
    assert_eq!(dup.code, EXIT_USAGE);
    assert!(dup.stderr.contains("N1"), "{}", dup.stderr);
    assert!(dup.stdout.is_empty());
}

#[test]
fn usage_errors_exit_3_and_help_exits_0() {
    assert_eq!(cli(&[], "").code, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"], "").code, EXIT_USAGE);
    assert_eq!(cli(&["contest", s(&contract())], "").code, EXIT_USAGE);
    assert_eq!(cli(&["--help"], "").code, EXIT_OK);
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ta, ha) = simulate(a.path(), "compliant");
    let (tb, hb) = simulate(b.path(), "compliant");
    assert_eq!(fs::read(ta).unwrap(), fs::read(tb).unwrap());
    assert_eq!(fs::read(ha).unwrap(), fs::read(hb).unwrap());
}

#[test]
fn gouge_trace_records_bankruptcy_and_new_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, _) = simulate(dir.path(), "price_gouge");
    let text = fs::read_to_string(trace).unwrap();
    assert!(text.contains("\"event_type\":\"competitor_bankruptcy\""));
    assert!(text.contains("\"algo_version\":\"policy-v2\""));
}

#[test]
fn decreasing_tiers_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "tiers = 20:149, 20:119, 20:89\n").unwrap();
    let o = cli(
        &["simulate", s(&cfg), "--out-trace", s(&dir.path().join("t")), "--out-history", s(&dir.path().join("h"))],
        "",
    );
    assert_eq!(o.code, EXIT_USAGE);
    assert!(!dir.path().join("t").exists());
}

#[test]
fn contest_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    for (cfg, want) in [("compliant", EXIT_OK), ("tier_skip", EXIT_NON_COMPLIANT), ("price_gouge", EXIT_NON_COMPLIANT)] {
        let (trace, history) = simulate(dir.path(), cfg);
        let seq = last_seq(&trace);
        let o = cli(&["contest", s(&contract()), s(&trace), s(&history), "--decision", &seq, "--out", s(&out)], "");
        assert_eq!(o.code, want, "{cfg}: {}", o.stderr);
        assert!(out.exists());
    }
}

#[test]
fn contest_without_history_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, _) = simulate(dir.path(), "compliant");
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "route,sale_date,tier,avg_price\n").unwrap();
    let seq = last_seq(&trace);
    let o = cli(
        &["contest", s(&contract()), s(&trace), "--source", &format!("history={}", s(&empty)), "--decision", &seq],
        "",
    );
    assert_eq!(o.code, EXIT_INCONCLUSIVE, "{}", o.stderr);
}

#[test]
fn contest_of_a_flipped_byte_exits_4_and_inputs_stay_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, history) = simulate(dir.path(), "compliant");
    let mut bytes = fs::read(&trace).unwrap();
    let at = bytes.len() / 2;
    bytes[at] ^= 0x01;
    fs::write(&trace, &bytes).unwrap();
    let before = fs::read(&history).unwrap();
    let out = dir.path().join("r.json");
    let o = cli(&["contest", s(&contract()), s(&trace), s(&history), "--decision", "10", "--out", s(&out)], "");
    assert_eq!(o.code, EXIT_INTEGRITY, "{}", o.stderr);
    assert!(fs::read_to_string(&out).unwrap().contains("\"verdict\": \"Inconclusive\""));
    assert_eq!(fs::read(&trace).unwrap(), bytes);
    assert_eq!(fs::read(&history).unwrap(), before);
    assert_eq!(cli(&["verify", s(&trace)], "").code, EXIT_INTEGRITY);
}

#[test]
fn contest_with_another_contract_version_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, history) = simulate(dir.path(), "compliant");
    let v2 = dir.path().join("v2.contract");
    fs::write(&v2, fs::read_to_string(contract()).unwrap().replace("version 1", "version 2")).unwrap();
    let o = cli(&["contest", s(&v2), s(&trace), s(&history), "--decision", "5"], "");
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("version"), "{}", o.stderr);
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, history) = simulate(dir.path(), "price_gouge");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = |out: &Path| {
        ["contest", s(&contract()), s(&trace), s(&history), "--decision", "50", "--out", s(out)].map(String::from)
    };
    let ca = cli(&args(&a).iter().map(String::as_str).collect::<Vec<_>>(), "").code;
    let cb = cli(&args(&b).iter().map(String::as_str).collect::<Vec<_>>(), "").code;
    assert_eq!(ca, cb);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn observe_streams_results() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, history) = simulate(dir.path(), "compliant");
    let o = cli(&["monitor", s(&contract()), s(&history), "--mode", "observe"], &fs::read_to_string(&trace).unwrap());
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.lines().count() > 0);
    assert!(!o.stdout.contains("\"Violated\""));

    let (trace, history) = simulate(dir.path(), "tier_skip");
    let o = cli(&["monitor", s(&contract()), s(&history), "--mode", "observe"], &fs::read_to_string(&trace).unwrap());
    assert_eq!(o.code, EXIT_NON_COMPLIANT);
    assert_eq!(o.stdout.lines().filter(|l| l.contains("\"Violated\"")).count(), 1);
}

#[test]
fn observe_rejects_a_non_chaining_event() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, history) = simulate(dir.path(), "compliant");
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(3);
    let o = cli(&["monitor", s(&contract()), s(&history), "--mode", "observe"], &lines.join("\n"));
    assert_eq!(o.code, EXIT_INTEGRITY, "{}", o.stderr);
    let o = cli(&["monitor", s(&contract()), s(&history), "--mode", "observe"], "{not json}\n");
    assert_eq!(o.code, EXIT_USAGE);
}

#[test]
fn regiment_allows_and_blocks() {
    let ts = sample_event().ts;
    let attrs = |tier: f64| {
        vec![
            ("flight".to_string(), Value::from("LH100")),
            ("route".to_string(), Value::from("TXL-MUC")),
            ("tier".to_string(), Value::Number(tier)),
            ("capacity".to_string(), Value::Number(1.0)),
        ]
    };
    let stream = [1.0, 2.0]
        .map(|k| proposal_line(&ProposedEvent::new(ts, "tier_opened", attrs(k), "policy-v1", 1)))
        .join("\n");
    let dir = tempfile::tempdir().unwrap();
    let (_, history) = simulate(dir.path(), "compliant");
    let o = cli(&["monitor", s(&contract()), s(&history), "--mode", "regiment"], &stream);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let lines: Vec<&str> = o.stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("{\"decision\":\"allow\""));
    assert!(lines[1].starts_with("{\"decision\":\"block\""));
    assert!(lines[1].contains("\"N1\""));
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_contestable");
    let ok = Command::new(bin).args(["check", s(&contract())]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let missing = Command::new(bin).args(["check", "missing.file"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_USAGE));
}
