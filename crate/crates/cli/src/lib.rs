//! The `sct` command line: run, trace, verify and bench over `.sct` files.

pub mod bench;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sct_core::reader::source_name;
use sct_core::verify::{Verdict, DEFAULT_FUEL};
use sct_core::{
    load_program, run, verify_termination, Answer, Config, Mode, Policy, Program, RunResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RT_ERROR: i32 = 2;
pub const EXIT_SC_ERROR: i32 = 3;
pub const EXIT_REFUTED: i32 = 4;
pub const EXIT_UNKNOWN: i32 = 5;
pub const EXIT_TIMEOUT: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "sct", version, about = "Size-change termination toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a program and print its answers.
    Run(RunArgs),
    /// Evaluate under the call-sequence semantics and report table snapshots.
    Trace(TraceArgs),
    /// Statically check size-change termination of an entry function.
    Verify(VerifyArgs),
    /// Measure monitoring overhead over benchmark manifests.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub file: PathBuf,
    /// standard, monitor, monitor-whole or trace.
    #[arg(long, default_value = "standard")]
    pub mode: Mode,
    /// always, off or backoff:<b>.
    #[arg(long, default_value = "always")]
    pub policy: Policy,
    /// Step ceiling; the mode's default when absent.
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub json: bool,
    /// Report machine counters.
    #[arg(long)]
    pub counters: bool,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Function to verify; defaults to the first `assume`d one.
    #[arg(long)]
    pub entry: Option<String>,
    /// Abstract states per function before widening.
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    pub fuel: usize,
    #[arg(long)]
    pub json: bool,
}

/// Exit status for an answer.
pub fn answer_code(a: &Answer) -> i32 {
    match a {
        Answer::Val(_) => EXIT_OK,
        Answer::RtError(_) => EXIT_RT_ERROR,
        Answer::ScError(_) => EXIT_SC_ERROR,
        Answer::Timeout(_) => EXIT_TIMEOUT,
    }
}

pub fn load_file(path: &Path) -> Result<Program, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    load_program(&source_name(path), &text).map_err(|e| format!("{}: {e}", path.display()))
}

fn report_error(err: &mut dyn Write, msg: &str) -> i32 {
    let _ = writeln!(err, "sct: {msg}");
    EXIT_INPUT
}

/// Runs a parsed command, writing results to `out` and diagnostics to `err`.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, out, err),
        Command::Trace(a) => cmd_trace(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Bench(a) => bench::cmd_bench(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(msg) => report_error(err, &msg),
    }
}

fn io(e: std::io::Error) -> String {
    e.to_string()
}

fn run_json(r: &RunResult, counters: bool) -> serde_json::Value {
    let answers: Vec<_> = r.answers.iter().map(Answer::to_json).collect();
    let mut v = json!({ "answers": answers });
    if counters {
        v["counters"] = json!(r.counters);
    }
    v
}

pub fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let p = load_file(&a.file)?;
    let mut cfg = Config::new(a.mode).policy(a.policy);
    if a.max_steps.is_some() {
        cfg = cfg.max_steps(a.max_steps);
    }
    let r = run(&p, &cfg);
    if a.json {
        writeln!(out, "{}", run_json(&r, a.counters)).map_err(io)?;
    } else {
        for ans in &r.answers {
            writeln!(out, "{ans}").map_err(io)?;
        }
        if a.counters {
            let c = &r.counters;
            writeln!(
                err,
                "steps {}  checks {}  graphs {}  applications {}  max-frames {}  cost {}",
                c.steps, c.checks, c.graphs_built, c.applications, c.max_frames, c.cost()
            )
            .map_err(io)?;
        }
    }
    Ok(answer_code(&r.answer()))
}

pub fn cmd_trace(a: &TraceArgs, out: &mut dyn Write) -> Result<i32, String> {
    let p = load_file(&a.file)?;
    let t = sct_core::eval_traced(&p, a.max_steps);
    if a.json {
        writeln!(out, "{}", t.to_json()).map_err(io)?;
    } else {
        writeln!(out, "{}", t.answer()).map_err(io)?;
        let verdicts = t.verdicts();
        let failing = verdicts.iter().filter(|v| v.iter().any(|ok| !ok)).count();
        writeln!(
            out,
            "{} snapshots, {} with a sequence failing prog?",
            t.snapshots.len(),
            failing
        )
        .map_err(io)?;
    }
    Ok(answer_code(&t.answer()))
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, String> {
    let p = load_file(&a.file)?;
    let entry = match &a.entry {
        Some(e) => e.clone(),
        None => p
            .assumptions
            .first()
            .map(|x| x.function.to_string())
            .or_else(|| p.globals.first().map(|g| g.name.to_string()))
            .ok_or("no entry: pass --entry")?,
    };
    let r = verify_termination(&p, &entry, a.fuel).map_err(|e| e.to_string())?;
    if a.json {
        writeln!(out, "{}", r.to_json()).map_err(io)?;
    } else {
        write!(out, "{r}").map_err(io)?;
    }
    Ok(match r.verdict {
        Verdict::Verified => EXIT_OK,
        Verdict::Refuted { .. } => EXIT_REFUTED,
        Verdict::Unknown(_) => EXIT_UNKNOWN,
    })
}
