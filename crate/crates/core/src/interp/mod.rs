//! An abstract machine for the language with three semantics: standard
//! evaluation honoring termination contracts, size-change monitored
//! evaluation, and call-sequence tracing.

mod machine;
pub mod table;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::expr::Program;
use crate::order::{DefaultOrder, ValueOrder};
use crate::scgraph::{prog, SCGraph};
use crate::value::{BlameLabel, ClosureKey, Label, Value};

pub use machine::wrap_termc;
pub use table::{Entry, GraphSeq, SCTable, UpdOutcome, ViolationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Unmonitored evaluation. `term/c` contracts are still enforced.
    Standard,
    /// Only applications inside the extent of a `term/c` application are
    /// monitored; each outermost contract application starts a fresh table.
    Monitor,
    /// Every closure application is monitored.
    MonitorWhole,
    /// Every application extends the table without guarding, and table
    /// snapshots are collected.
    Trace,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Monitor => "monitor",
            Mode::MonitorWhole => "monitor-whole",
            Mode::Trace => "trace",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "standard" => Ok(Mode::Standard),
            "monitor" => Ok(Mode::Monitor),
            "monitor-whole" => Ok(Mode::MonitorWhole),
            "trace" => Ok(Mode::Trace),
            _ => Err(format!(
                "unknown mode {s:?} (expected standard, monitor, monitor-whole or trace)"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How often a monitored closure's graph sequence is extended and checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    Always,
    /// Check at per-key call indices `b, 2b, 4b, …`, comparing against the
    /// arguments of the previous checkpoint.
    Backoff(u64),
    Off,
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Policy, String> {
        match s {
            "always" => Ok(Policy::Always),
            "off" => Ok(Policy::Off),
            _ => match s.strip_prefix("backoff:").map(str::parse::<u64>) {
                Some(Ok(b)) if b >= 1 => Ok(Policy::Backoff(b)),
                _ => Err(format!(
                    "unknown policy {s:?} (expected always, off or backoff:<b> with b >= 1)"
                )),
            },
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Always => f.write_str("always"),
            Policy::Backoff(b) => write!(f, "backoff:{b}"),
            Policy::Off => f.write_str("off"),
        }
    }
}

pub const DEFAULT_STANDARD_MAX_STEPS: u64 = 100_000_000;
pub const DEFAULT_TRACE_MAX_STEPS: u64 = 10_000_000;

#[derive(Clone)]
pub struct Config {
    pub mode: Mode,
    pub policy: Policy,
    /// Step ceiling; `None` runs without one.
    pub max_steps: Option<u64>,
    pub order: Arc<dyn ValueOrder>,
    /// Record an [`Event`] for every table update.
    pub record_events: bool,
}

impl Config {
    pub fn new(mode: Mode) -> Config {
        let max_steps = match mode {
            Mode::Standard => Some(DEFAULT_STANDARD_MAX_STEPS),
            Mode::Trace => Some(DEFAULT_TRACE_MAX_STEPS),
            Mode::Monitor | Mode::MonitorWhole => None,
        };
        Config {
            mode,
            policy: Policy::Always,
            max_steps,
            order: Arc::new(DefaultOrder),
            record_events: false,
        }
    }

    pub fn policy(mut self, policy: Policy) -> Config {
        self.policy = policy;
        self
    }

    pub fn max_steps(mut self, max_steps: Option<u64>) -> Config {
        self.max_steps = max_steps;
        self
    }

    pub fn order(mut self, order: Arc<dyn ValueOrder>) -> Config {
        self.order = order;
        self
    }

    pub fn record_events(mut self, on: bool) -> Config {
        self.record_events = on;
        self
    }
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Config")
            .field("mode", &self.mode)
            .field("policy", &self.policy)
            .field("max_steps", &self.max_steps)
            .field("record_events", &self.record_events)
            .finish_non_exhaustive()
    }
}

/// Instrumentation counters. All costs are abstract and deterministic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Machine transitions.
    pub steps: u64,
    /// Primitive work in integer limbs.
    pub prim_work: u64,
    /// Value comparisons made while building graphs.
    pub compare_work: u64,
    /// Graph compositions made while monitoring.
    pub compose_work: u64,
    /// Size-change checks (monitor steps).
    pub checks: u64,
    pub graphs_built: u64,
    /// Closure applications.
    pub applications: u64,
    /// High-water mark of the continuation stack.
    pub max_frames: u64,
    /// High-water mark of live size-change table entries.
    pub max_entries: u64,
    /// Largest composition set kept for one table entry.
    pub max_end_set: u64,
}

impl Counters {
    /// Total abstract cost used for slowdown ratios.
    pub fn cost(&self) -> u64 {
        self.steps + self.prim_work + self.compare_work + self.compose_work
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RtErrorKind {
    NotAFunction,
    Arity,
    Domain,
    User,
    UndefinedGlobal,
}

impl RtErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            RtErrorKind::NotAFunction => "not-a-function",
            RtErrorKind::Arity => "arity",
            RtErrorKind::Domain => "domain",
            RtErrorKind::User => "user",
            RtErrorKind::UndefinedGlobal => "undefined-global",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RtError {
    pub kind: RtErrorKind,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScError {
    pub blame: BlameLabel,
    pub report: ViolationReport,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Answer {
    Val(Value),
    RtError(RtError),
    ScError(Box<ScError>),
    Timeout(u64),
}

impl Answer {
    pub fn value(&self) -> Option<&Value> {
        match self {
            Answer::Val(v) => Some(v),
            _ => None,
        }
    }

    pub fn sc_error(&self) -> Option<&ScError> {
        match self {
            Answer::ScError(e) => Some(e),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Answer::Val(_) => "value",
            Answer::RtError(_) => "rt-error",
            Answer::ScError(_) => "sc-error",
            Answer::Timeout(_) => "timeout",
        }
    }

    /// JSON report: values, run-time errors, timeouts and size-change
    /// violations each have their own shape, keyed by `kind`.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Answer::Val(v) => json!({"kind": "value", "value": v.to_string()}),
            Answer::RtError(e) => json!({
                "kind": "rt-error",
                "error": e.kind.name(),
                "message": e.message,
            }),
            Answer::Timeout(steps) => json!({"kind": "timeout", "steps": steps}),
            Answer::ScError(e) => json!({
                "kind": "sc-error",
                "blame": e.blame.to_string(),
                "closure": e.report.closure.as_str(),
                "graph": e.report.graph,
                "transition": e.report.transition,
                "call_index": e.report.call_index,
                "args": e.report.args.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            }),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Val(v) => write!(f, "{v}"),
            Answer::RtError(e) => write!(f, "run-time error ({}): {}", e.kind.name(), e.message),
            Answer::Timeout(n) => write!(f, "timeout after {n} steps"),
            Answer::ScError(e) => write!(
                f,
                "size-change violation: blaming {}; closure {} at call {} with graph {{{}}}",
                e.blame,
                e.report.closure,
                e.report.call_index,
                e.report.graph
            ),
        }
    }
}

/// One table update, recorded when [`Config::record_events`] is set.
#[derive(Clone, Debug)]
pub struct Event {
    pub key: ClosureKey,
    pub closure: Label,
    pub args: Vec<Value>,
    pub call_index: u64,
    pub outcome: EventOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventOutcome {
    Fresh,
    Skipped,
    Checked(SCGraph),
    Violation(SCGraph),
    /// Unguarded extension in trace mode.
    Extended(Option<SCGraph>),
}

impl EventOutcome {
    pub fn graph(&self) -> Option<&SCGraph> {
        match self {
            EventOutcome::Checked(g) | EventOutcome::Violation(g) => Some(g),
            EventOutcome::Extended(g) => g.as_ref(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    /// One answer per top-level expression evaluated. Evaluation stops at
    /// the first answer that is not a value; a failing global definition is
    /// reported as the only answer.
    pub answers: Vec<Answer>,
    pub counters: Counters,
    pub events: Vec<Event>,
}

impl RunResult {
    /// The program's answer: that of the last expression evaluated, or the
    /// empty list for a program without expressions.
    pub fn answer(&self) -> Answer {
        self.answers.last().cloned().unwrap_or(Answer::Val(Value::Nil))
    }
}

/// One table entry inside a trace snapshot.
#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub key: ClosureKey,
    pub args: Arc<[Value]>,
    pub graphs: GraphSeq,
}

pub type Snapshot = Vec<TraceEntry>;

#[derive(Clone, Debug)]
pub struct TraceResult {
    pub run: RunResult,
    /// Table snapshots: the initial table of each evaluation and the table
    /// after every closure application, in order of occurrence.
    pub snapshots: Vec<Snapshot>,
}

impl TraceResult {
    pub fn answer(&self) -> Answer {
        self.run.answer()
    }

    /// `prog?` verdict for every entry of every snapshot, memoized per
    /// shared graph sequence.
    pub fn verdicts(&self) -> Vec<Vec<bool>> {
        let mut memo: std::collections::HashMap<usize, bool> = Default::default();
        self.snapshots
            .iter()
            .map(|snap| {
                snap.iter()
                    .map(|e| {
                        *memo
                            .entry(e.graphs.id())
                            .or_insert_with(|| prog(&e.graphs.to_vec()))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn any_prog_failure(&self) -> bool {
        self.verdicts().iter().flatten().any(|ok| !ok)
    }

    /// JSON report: the answer, and every snapshot as a list of entries
    /// with their raw graph sequence and its `prog?` verdict.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let verdicts = self.verdicts();
        let snapshots: Vec<_> = self
            .snapshots
            .iter()
            .zip(&verdicts)
            .map(|(snap, oks)| {
                snap.iter()
                    .zip(oks)
                    .map(|(e, ok)| {
                        json!({
                            "closure": e.key.label().as_str(),
                            "args": e.args.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                            "graphs": e.graphs.to_vec(),
                            "prog": ok,
                        })
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        json!({
            "answer": self.answer().to_json(),
            "snapshots": snapshots,
            "counters": self.run.counters,
        })
    }
}

/// Runs a program under `cfg`: globals are defined in order, then each
/// top-level expression is evaluated with a fresh size-change table.
pub fn run(program: &Program, cfg: &Config) -> RunResult {
    machine::run(program, cfg).0
}

pub fn eval_standard(program: &Program, max_steps: Option<u64>) -> Answer {
    run(program, &Config::new(Mode::Standard).max_steps(max_steps)).answer()
}

/// Monitored evaluation; `whole` selects whole-program rather than contract
/// monitoring.
pub fn eval_monitored(program: &Program, policy: Policy, whole: bool) -> Answer {
    let mode = if whole { Mode::MonitorWhole } else { Mode::Monitor };
    run(program, &Config::new(mode).policy(policy)).answer()
}

pub fn eval_traced(program: &Program, max_steps: Option<u64>) -> TraceResult {
    let cfg = Config::new(Mode::Trace).max_steps(max_steps);
    let (run, snapshots) = machine::run(program, &cfg);
    TraceResult { run, snapshots }
}

pub fn trace(program: &Program, cfg: &Config) -> TraceResult {
    let (run, snapshots) = machine::run(program, cfg);
    TraceResult { run, snapshots }
}
