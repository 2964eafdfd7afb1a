//! Size-change termination for a small untyped functional language: an
//! interpreter with standard, monitored and call-sequence semantics,
//! termination contracts with blame, and a static size-change verifier.

pub mod corpus;
pub mod expr;
pub mod interp;
pub mod order;
pub mod prim;
pub mod reader;
pub mod scgraph;
pub mod value;
pub mod verify;

pub use interp::{
    eval_monitored, eval_standard, eval_traced, run, wrap_termc, Answer, Config, Counters, Mode,
    Policy, RunResult, SCTable, TraceResult, ViolationReport,
};
pub use expr::{Expr, Lambda, ParamSort, Program};
pub use order::{precedes, precedes_eq, DefaultOrder, SizeRelation, ValueOrder};
pub use prim::Prim;
pub use reader::{load_program, load_with_main, print_value, LoadError};
pub use scgraph::{
    build_graph, close_under_composition, monitor_init, monitor_step, prog, scp_holds, Change,
    GraphArc, MonitorState, SCGraph, Scp,
};
pub use value::{closure_key, BlameLabel, Closure, ClosureKey, Label, SourcePos, Value};
pub use verify::{verify_termination, CallSite, UnknownReason, Verdict, VerifyError, VerifyResult};
