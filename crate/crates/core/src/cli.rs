//! The `contestable` command line.
//!
//! Exit codes: 0 ok or Compliant, 1 NonCompliant or a violation seen,
//! 2 Inconclusive, 3 usage, parse, validation or version errors,
//! 4 integrity errors. Human-readable text goes to stderr; reports and
//! monitor records go to files or stdout.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::contest::{contest_decision, render_report, ContestError, ContestRequest, ScopeMode, Verdict};
use crate::dsl::{parse_contract, validate_contract, Contract};
use crate::eval::{NormInstanceResult, Status};
use crate::monitor::{ChainError, Decision, MonitorError, MonitorMode, MonitorState};
use crate::sim::{generate, SimConfig};
use crate::trace::{
    event_line, parse_event_line, parse_header_line, parse_proposal_line, read_history,
    read_trace_forensic, write_history, write_trace, HistoryTable, IntegrityError, IntegrityKind,
    Sources, TraceHeader,
};
use crate::value::Timestamp;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NON_COMPLIANT: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "contestable", version, about = "Check compliance contracts, verify decision traces and contest recorded decisions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a contract.
    Check { contract: PathBuf },
    /// Verify the hash chain of a trace file.
    Verify { trace: PathBuf },
    /// Contest one recorded decision and write the report.
    Contest {
        contract: PathBuf,
        trace: PathBuf,
        /// History tables, assigned to declared sources in order.
        history: Vec<PathBuf>,
        /// Seq of the contested decision event.
        #[arg(long)]
        decision: u64,
        #[arg(long, value_enum, default_value_t = ScopeArg::Key)]
        scope: ScopeArg,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Table for a declared source, as NAME=PATH.
        #[arg(long = "source", value_parser = parse_source_arg)]
        sources: Vec<(String, PathBuf)>,
    },
    /// Monitor an event stream read from stdin.
    Monitor {
        contract: PathBuf,
        history: Vec<PathBuf>,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long = "source", value_parser = parse_source_arg)]
        sources: Vec<(String, PathBuf)>,
    },
    /// Generate a trace and history table from a simulator config.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out_trace: PathBuf,
        #[arg(long)]
        out_history: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    Key,
    Whole,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Observe,
    Regiment,
}

fn parse_source_arg(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, found {s:?}")),
    }
}

/// A failed command: exit code plus the message for stderr.
struct Fail(i32, String);

type CmdResult = Result<i32, Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail(EXIT_USAGE, msg.into())
}

/// Runs the command line with explicit streams; returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Check { contract } => cmd_check(&contract, stderr),
        Command::Verify { trace } => cmd_verify(&trace, stderr),
        Command::Contest {
            contract,
            trace,
            history,
            decision,
            scope,
            out,
            sources,
        } => {
            let scope = match scope {
                ScopeArg::Key => ScopeMode::ScopeKey,
                ScopeArg::Whole => ScopeMode::WholeTrace,
            };
            cmd_contest(&contract, &trace, &history, &sources, decision, scope, out.as_deref(), stdout, stderr)
        }
        Command::Monitor {
            contract,
            history,
            mode,
            sources,
        } => {
            let mode = match mode {
                ModeArg::Observe => MonitorMode::Observe,
                ModeArg::Regiment => MonitorMode::Regiment,
            };
            cmd_monitor(&contract, &history, &sources, mode, stdin, stdout, stderr)
        }
        Command::Simulate {
            config,
            out_trace,
            out_history,
        } => cmd_simulate(&config, &out_trace, &out_history, stderr),
    };
    match outcome {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

fn read_text(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_contract(path: &Path, stderr: &mut dyn Write) -> Result<Contract, Fail> {
    let text = read_text(path)?;
    let contract = parse_contract(&text).map_err(|e| usage(format!("{}:{e}", path.display())))?;
    let diagnostics = validate_contract(&contract);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            let _ = writeln!(stderr, "{}: {d}", path.display());
        }
        return Err(usage(format!("{}: {} validation error(s)", path.display(), diagnostics.len())));
    }
    Ok(contract)
}

/// Resolves every declared source. Explicit paths must exist; a missing
/// file at the declared default location leaves the source absent, so
/// norms reading it come out Undetermined.
fn load_sources(
    contract: &Contract,
    contract_path: &Path,
    positional: &[PathBuf],
    named: &[(String, PathBuf)],
    stderr: &mut dyn Write,
) -> Result<Sources, Fail> {
    if positional.len() > contract.sources.len() {
        return Err(usage(format!(
            "{} history file(s) given, contract declares {} source(s)",
            positional.len(),
            contract.sources.len()
        )));
    }
    if let Some((name, _)) = named.iter().find(|(n, _)| contract.source(n).is_none()) {
        return Err(usage(format!("contract declares no source `{name}`")));
    }
    let base = contract_path.parent().unwrap_or(Path::new(""));
    let mut sources = Sources::new();
    for (i, decl) in contract.sources.iter().enumerate() {
        let explicit = named
            .iter()
            .rev()
            .find(|(n, _)| *n == decl.name)
            .map(|(_, p)| p.clone())
            .or_else(|| positional.get(i).cloned());
        let path = match explicit {
            Some(p) => p,
            None => {
                let p = base.join(&decl.location);
                if !p.exists() {
                    let _ = writeln!(
                        stderr,
                        "warning: source `{}` not found at {}; treating it as absent",
                        decl.name,
                        p.display()
                    );
                    continue;
                }
                p
            }
        };
        let file = fs::File::open(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let table: HistoryTable =
            read_history(decl, std::io::BufReader::new(file)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        sources.insert(decl.name.clone(), table);
    }
    Ok(sources)
}

fn cmd_check(path: &Path, stderr: &mut dyn Write) -> CmdResult {
    let c = load_contract(path, stderr)?;
    let _ = writeln!(
        stderr,
        "ok: contract {} version {}, {} source(s), {} norm(s)",
        c.id,
        c.version,
        c.sources.len(),
        c.norms.len()
    );
    Ok(EXIT_OK)
}

fn cmd_verify(path: &Path, stderr: &mut dyn Write) -> CmdResult {
    let bytes = fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let loaded = read_trace_forensic(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if let Some(d) = &loaded.defect {
        let _ = writeln!(stderr, "{}: line {}: {}", path.display(), d.line, d.message);
    }
    match loaded.first_integrity_error() {
        Some(err) => {
            let _ = writeln!(stderr, "integrity error: {err}");
            Ok(EXIT_INTEGRITY)
        }
        None => {
            let _ = writeln!(stderr, "ok: {} event(s), chain intact", loaded.trace.len());
            Ok(EXIT_OK)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_contest(
    contract_path: &Path,
    trace_path: &Path,
    positional: &[PathBuf],
    named: &[(String, PathBuf)],
    decision: u64,
    scope: ScopeMode,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let contract = load_contract(contract_path, stderr)?;
    let bytes = fs::read(trace_path).map_err(|e| usage(format!("{}: {e}", trace_path.display())))?;
    let loaded = read_trace_forensic(&bytes).map_err(|e| usage(format!("{}: {e}", trace_path.display())))?;
    if let Some(d) = &loaded.defect {
        let _ = writeln!(stderr, "{}: line {}: {}", trace_path.display(), d.line, d.message);
    }
    let sources = load_sources(&contract, contract_path, positional, named, stderr)?;
    let defect = loaded.defect.as_ref().map(|d| IntegrityError {
        seq: d.seq,
        kind: IntegrityKind::MalformedRecord,
    });
    let request = ContestRequest::new(&contract, &loaded.trace, &sources, decision)
        .scope(scope)
        .with_record_defect(defect);
    // version mismatch, unknown seq and trace/contract disagreement are input errors
    let report = contest_decision(request).map_err(|e: ContestError| usage(e.to_string()))?;
    let text = render_report(&report);
    match out {
        Some(p) => fs::write(p, &text).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| usage(format!("stdout: {e}")))?,
    }
    let violated = count(&report.results, Status::Violated);
    let undetermined = count(&report.results, Status::Undetermined);
    if let Some(err) = report.trace_integrity {
        let _ = writeln!(stderr, "verdict: Inconclusive (integrity error: {err})");
        return Ok(EXIT_INTEGRITY);
    }
    let _ = writeln!(
        stderr,
        "verdict: {:?} ({} instance(s), {} violated, {} undetermined, {} event(s) in scope)",
        report.verdict,
        report.results.len(),
        violated,
        undetermined,
        report.scope_seqs.len()
    );
    Ok(match report.verdict {
        Verdict::Compliant => EXIT_OK,
        Verdict::NonCompliant => EXIT_NON_COMPLIANT,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn count(results: &[NormInstanceResult], status: Status) -> usize {
    results.iter().filter(|r| r.status == status).count()
}

fn default_header() -> TraceHeader {
    TraceHeader {
        trace_id: "stdin".into(),
        created: Timestamp::from_micros(0),
        scope_key_attr: "flight".into(),
    }
}

fn result_json(r: &NormInstanceResult) -> String {
    serde_json::to_string(r).expect("results hold only finite numbers")
}

fn results_json(rs: &[NormInstanceResult]) -> String {
    serde_json::to_string(rs).expect("results hold only finite numbers")
}

/// Reads the stream protocol: an optional trace header line, then one
/// event (observe) or proposal (regiment) per line. Blank lines are
/// skipped.
fn cmd_monitor(
    contract_path: &Path,
    positional: &[PathBuf],
    named: &[(String, PathBuf)],
    mode: MonitorMode,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let contract = load_contract(contract_path, stderr)?;
    let sources = load_sources(&contract, contract_path, positional, named, stderr)?;
    let mut lines = Vec::new();
    for (i, line) in stdin.lines().enumerate() {
        let line = line.map_err(|e| usage(format!("stdin line {}: {e}", i + 1)))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let mut header = default_header();
    let mut body = &lines[..];
    if let Some((n, first)) = lines.first() {
        if first.contains("\"trace_id\"") {
            header = parse_header_line(*n, first).map_err(|e| usage(format!("stdin {e}")))?;
            body = &lines[1..];
        }
    }
    let mut state = MonitorState::new(contract, sources, mode, header);
    let started = Instant::now();
    let (mut violated, mut blocked) = (0usize, 0usize);
    let write_line = |out: &mut dyn Write, text: String| {
        writeln!(out, "{text}").map_err(|e| usage(format!("stdout: {e}")))
    };
    for (n, line) in body {
        match mode {
            MonitorMode::Observe => {
                let event = parse_event_line(*n, line).map_err(|e| usage(format!("stdin {e}")))?;
                let results = state.step_observe(event).map_err(|e| monitor_fail(*n, e))?;
                for r in &results {
                    if r.status == Status::Violated {
                        violated += 1;
                    }
                    write_line(stdout, result_json(r))?;
                }
            }
            MonitorMode::Regiment => {
                let p = parse_proposal_line(*n, line).map_err(|e| usage(format!("stdin {e}")))?;
                let (seq, prev) = state.next_position();
                if let Some(found) = p.seq.filter(|&s| s != seq) {
                    return Err(monitor_fail(*n, ChainError::Seq { expected: seq, found }.into()));
                }
                if p.prev_hash.is_some_and(|h| h != prev) {
                    return Err(monitor_fail(*n, ChainError::PrevHash { seq }.into()));
                }
                match state.step_regiment(p.event).map_err(|e| monitor_fail(*n, e))? {
                    Decision::Allow { event, results } => write_line(
                        stdout,
                        format!(
                            "{{\"decision\":\"allow\",\"event\":{},\"results\":{}}}",
                            event_line(&event),
                            results_json(&results)
                        ),
                    )?,
                    Decision::Block(v) => {
                        blocked += 1;
                        violated += v.len();
                        write_line(
                            stdout,
                            format!("{{\"decision\":\"block\",\"violations\":{}}}", results_json(&v)),
                        )?
                    }
                }
            }
        }
    }
    let elapsed = started.elapsed();
    let per_event = elapsed.as_secs_f64() * 1e6 / body.len().max(1) as f64;
    let _ = writeln!(
        stderr,
        "monitor: {} line(s), {} committed, {} result(s), {} violated, {} blocked, {:.1} us/line",
        body.len(),
        state.trace().len(),
        state.emitted(),
        violated,
        blocked,
        per_event
    );
    Ok(match mode {
        MonitorMode::Observe if violated > 0 => EXIT_NON_COMPLIANT,
        _ => EXIT_OK,
    })
}

fn monitor_fail(line: usize, e: MonitorError) -> Fail {
    let code = match e {
        MonitorError::Chain(_) => EXIT_INTEGRITY,
        MonitorError::WrongMode(_) | MonitorError::Eval(_) => EXIT_USAGE,
    };
    Fail(code, format!("stdin line {line}: {e}"))
}

fn cmd_simulate(config: &Path, out_trace: &Path, out_history: &Path, stderr: &mut dyn Write) -> CmdResult {
    let cfg = SimConfig::parse(&read_text(config)?).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let out = generate(&cfg).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let mut trace_bytes = Vec::new();
    write_trace(&out.trace, &mut trace_bytes).expect("writing to a Vec cannot fail");
    let mut history_bytes = Vec::new();
    write_history(&out.history, &mut history_bytes).map_err(|e| usage(e.to_string()))?;
    fs::write(out_trace, trace_bytes).map_err(|e| usage(format!("{}: {e}", out_trace.display())))?;
    fs::write(out_history, history_bytes).map_err(|e| usage(format!("{}: {e}", out_history.display())))?;
    let _ = writeln!(
        stderr,
        "simulated {} ({}): {} event(s), {} history row(s)",
        out.trace.header.trace_id,
        cfg.scenario,
        out.trace.len(),
        out.history.rows.len()
    );
    Ok(EXIT_OK)
}
