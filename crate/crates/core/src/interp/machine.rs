use std::rc::Rc;
use std::sync::Arc;

use crate::expr::{Expr, Program, VarSlot};
use crate::prim::{self, Prim, PrimErrorKind};
use crate::value::{closure_key, BlameLabel, Closure, Value};

use super::table::{Mark, SCTable, UpdOutcome};
use super::{
    Answer, Config, Counters, Event, EventOutcome, Mode, RtError, RtErrorKind, RunResult, ScError,
    Snapshot, TraceEntry,
};

type Env = Rc<[Value]>;

/// Wraps a closure in a termination contract. Other values, including
/// already-wrapped closures, are returned unchanged.
pub fn wrap_termc(v: Value, blame: BlameLabel) -> Value {
    match v {
        Value::Clo(c) => Value::TermClo(c, blame),
        other => other,
    }
}

enum Frame<'p> {
    /// Evaluating the operator and operands of an application; `vals` holds
    /// those already evaluated.
    Args {
        fun: &'p Expr,
        args: &'p [Expr],
        vals: Vec<Value>,
        env: Env,
    },
    Branch {
        then: &'p Expr,
        els: &'p Expr,
        env: Env,
    },
    Wrap(&'p BlameLabel),
    /// Pushed by non-tail closure applications: restores the caller's table,
    /// monitoring flag and blame party on return.
    Restore {
        mark: Mark,
        monitoring: bool,
        blame: Option<BlameLabel>,
    },
}

enum Control<'p> {
    Eval(&'p Expr, Env),
    Ret(Value),
}

struct Machine<'p> {
    program: &'p Program,
    cfg: &'p Config,
    globals: Vec<Option<Value>>,
    table: SCTable,
    monitoring: bool,
    blame: Option<BlameLabel>,
    stack: Vec<Frame<'p>>,
    counters: Counters,
    events: Vec<Event>,
    snapshots: Option<Vec<Snapshot>>,
}

type Halt = Answer;

fn rt(kind: RtErrorKind, message: impl Into<String>) -> Halt {
    Answer::RtError(RtError {
        kind,
        message: message.into(),
    })
}

impl<'p> Machine<'p> {
    fn reset(&mut self) {
        self.table = SCTable::new();
        self.monitoring = self.cfg.mode == Mode::MonitorWhole;
        self.blame = None;
        self.stack.clear();
        if let Some(s) = &mut self.snapshots {
            s.push(Vec::new());
        }
    }

    fn push(&mut self, f: Frame<'p>) {
        self.stack.push(f);
        let depth = self.stack.len() as u64;
        if depth > self.counters.max_frames {
            self.counters.max_frames = depth;
        }
    }

    fn tick(&mut self) -> Result<(), Halt> {
        self.counters.steps += 1;
        match self.cfg.max_steps {
            Some(max) if self.counters.steps > max => Err(Answer::Timeout(max)),
            _ => Ok(()),
        }
    }

    /// Values of expressions that need no continuation.
    fn atomic(&mut self, e: &'p Expr, env: &Env) -> Option<Result<Value, Halt>> {
        Some(match e {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Prim(p) => Ok(Value::Prim(*p)),
            Expr::Var(v) => match v.slot {
                VarSlot::Local(i) => Ok(env[i as usize].clone()),
                VarSlot::Global(i) => match &self.globals[i as usize] {
                    Some(g) => Ok(g.clone()),
                    None => Err(rt(
                        RtErrorKind::UndefinedGlobal,
                        format!("{} used before its definition", v.name),
                    )),
                },
            },
            Expr::Lam(lam) => {
                let captured: Box<[Value]> = lam
                    .captures
                    .iter()
                    .map(|c| env[c.from as usize].clone())
                    .collect();
                Ok(Value::Clo(Arc::new(Closure::new(lam.clone(), captured))))
            }
            _ => return None,
        })
    }

    fn eval(&mut self, expr: &'p Expr) -> Result<Value, Halt> {
        let mut ctl = Control::Eval(expr, Rc::from(Vec::new()));
        loop {
            self.tick()?;
            ctl = match ctl {
                Control::Eval(e, env) => {
                    if let Some(v) = self.atomic(e, &env) {
                        Control::Ret(v?)
                    } else {
                        match e {
                            Expr::If0(c, t, f) => {
                                self.push(Frame::Branch {
                                    then: t,
                                    els: f,
                                    env: env.clone(),
                                });
                                Control::Eval(c, env)
                            }
                            Expr::TermC(body, blame) => {
                                self.push(Frame::Wrap(blame));
                                Control::Eval(body, env)
                            }
                            Expr::App(fun, args) => self.collect(fun, args, Vec::new(), env)?,
                            _ => unreachable!("atomic expressions handled above"),
                        }
                    }
                }
                Control::Ret(v) => match self.stack.pop() {
                    None => return Ok(v),
                    Some(Frame::Branch { then, els, env }) => {
                        Control::Eval(if v.is_zero() { then } else { els }, env)
                    }
                    Some(Frame::Wrap(blame)) => Control::Ret(wrap_termc(v, blame.clone())),
                    Some(Frame::Restore {
                        mark,
                        monitoring,
                        blame,
                    }) => {
                        self.table.leave(mark);
                        self.monitoring = monitoring;
                        self.blame = blame;
                        Control::Ret(v)
                    }
                    Some(Frame::Args {
                        fun,
                        args,
                        mut vals,
                        env,
                    }) => {
                        vals.push(v);
                        self.collect(fun, args, vals, env)?
                    }
                },
            };
        }
    }

    /// Evaluates the remaining parts of an application, inline where they
    /// are atomic, and applies once all are values.
    fn collect(
        &mut self,
        fun: &'p Expr,
        args: &'p [Expr],
        mut vals: Vec<Value>,
        env: Env,
    ) -> Result<Control<'p>, Halt> {
        if vals.capacity() == 0 {
            vals.reserve_exact(args.len() + 1);
        }
        while vals.len() <= args.len() {
            let next = if vals.is_empty() {
                fun
            } else {
                &args[vals.len() - 1]
            };
            match self.atomic(next, &env) {
                Some(v) => {
                    self.tick()?;
                    vals.push(v?);
                }
                None => {
                    self.push(Frame::Args {
                        fun,
                        args,
                        vals,
                        env: env.clone(),
                    });
                    return Ok(Control::Eval(next, env));
                }
            }
        }
        drop(env);
        self.apply(vals)
    }

    fn apply(&mut self, mut vals: Vec<Value>) -> Result<Control<'p>, Halt> {
        let fun = vals.remove(0);
        let args = vals;
        match fun {
            Value::Prim(p) => self.apply_prim(p, &args),
            Value::Clo(c) => self.apply_closure(c, args, None),
            Value::TermClo(c, blame) => self.apply_closure(c, args, Some(blame)),
            other => Err(rt(
                RtErrorKind::NotAFunction,
                format!("application of non-procedure {other}"),
            )),
        }
    }

    fn apply_prim(&mut self, p: Prim, args: &[Value]) -> Result<Control<'p>, Halt> {
        match prim::apply(p, args) {
            Ok((v, work)) => {
                self.counters.prim_work += work;
                Ok(Control::Ret(v))
            }
            Err(e) => {
                let kind = match e.kind {
                    PrimErrorKind::Arity => RtErrorKind::Arity,
                    PrimErrorKind::Domain => RtErrorKind::Domain,
                    PrimErrorKind::User => RtErrorKind::User,
                };
                Err(rt(kind, e.to_string()))
            }
        }
    }

    fn apply_closure(
        &mut self,
        clo: Arc<Closure>,
        args: Vec<Value>,
        contract: Option<BlameLabel>,
    ) -> Result<Control<'p>, Halt> {
        let lam = &clo.lambda;
        if args.len() != lam.arity() {
            return Err(rt(
                RtErrorKind::Arity,
                format!(
                    "{} expects {} arguments, got {}",
                    lam.label,
                    lam.arity(),
                    args.len()
                ),
            ));
        }
        self.counters.applications += 1;

        let is_tail = matches!(self.stack.last(), None | Some(Frame::Restore { .. }));
        if !is_tail {
            let mark = self.table.enter();
            let frame = Frame::Restore {
                mark,
                monitoring: self.monitoring,
                blame: self.blame.clone(),
            };
            self.push(frame);
        }

        let key = closure_key(&clo);
        match self.cfg.mode {
            Mode::Trace => {
                let g = self.table.ext(&key, &args, &*self.cfg.order, &mut self.counters);
                if self.cfg.record_events {
                    self.record(&key, &args, EventOutcome::Extended(g));
                }
                self.snapshot();
            }
            mode => {
                if let Some(blame) = contract {
                    if !self.monitoring && mode != Mode::MonitorWhole {
                        // The outermost contract application starts a fresh
                        // table. Outside any monitored extent the table is
                        // already empty, as every extent restores it.
                        debug_assert!(self.table.is_empty());
                        self.monitoring = true;
                    }
                    self.blame = Some(blame);
                }
                if self.monitoring {
                    self.guard(&key, &args)?;
                }
            }
        }

        let mut frame = args;
        frame.extend(clo.captured.iter().cloned());
        Ok(Control::Eval(&self.program.lambda(lam.id).body, Rc::from(frame)))
    }

    fn guard(&mut self, key: &crate::value::ClosureKey, args: &[Value]) -> Result<(), Halt> {
        let outcome = self.table.upd(
            key,
            args,
            self.cfg.policy,
            &*self.cfg.order,
            &mut self.counters,
        );
        match outcome {
            Ok(o) => {
                if self.cfg.record_events {
                    let e = match o {
                        UpdOutcome::Fresh => EventOutcome::Fresh,
                        UpdOutcome::Skipped => EventOutcome::Skipped,
                        UpdOutcome::Checked(g) => EventOutcome::Checked(g),
                        UpdOutcome::Off => return Ok(()),
                    };
                    self.record(key, args, e);
                }
                Ok(())
            }
            Err(report) => {
                if self.cfg.record_events {
                    self.record(key, args, EventOutcome::Violation(report.transition.clone()));
                }
                Err(Answer::ScError(Box::new(ScError {
                    blame: self.blame.clone().unwrap_or(BlameLabel::Program),
                    report: *report,
                })))
            }
        }
    }

    fn record(&mut self, key: &crate::value::ClosureKey, args: &[Value], outcome: EventOutcome) {
        let call_index = self.table.get(key).map_or(0, |e| e.calls)
            + u64::from(matches!(outcome, EventOutcome::Violation(_)));
        self.events.push(Event {
            key: key.clone(),
            closure: key.label().clone(),
            args: args.to_vec(),
            call_index,
            outcome,
        });
    }

    fn snapshot(&mut self) {
        let Some(snaps) = &mut self.snapshots else {
            return;
        };
        let snap: Snapshot = self
            .table
            .entries()
            .into_iter()
            .map(|(k, e)| TraceEntry {
                key: k.clone(),
                args: e.args.clone(),
                graphs: e.raw.clone().unwrap_or_default(),
            })
            .collect();
        snaps.push(snap);
    }

    fn run_top(&mut self, e: &'p Expr) -> Answer {
        self.reset();
        let answer = match self.eval(e) {
            Ok(v) => Answer::Val(v),
            Err(halt) => halt,
        };
        // Leave no saved tables behind after an abrupt stop.
        self.stack.clear();
        answer
    }
}

pub(super) fn run(program: &Program, cfg: &Config) -> (RunResult, Vec<Snapshot>) {
    let mut m = Machine {
        program,
        cfg,
        globals: vec![None; program.globals.len()],
        table: SCTable::new(),
        monitoring: false,
        blame: None,
        stack: Vec::new(),
        counters: Counters::default(),
        events: Vec::new(),
        snapshots: (cfg.mode == Mode::Trace).then(Vec::new),
    };
    let mut answers = Vec::new();
    let mut ok = true;
    for (i, g) in program.globals.iter().enumerate() {
        match m.run_top(&g.expr) {
            Answer::Val(v) => m.globals[i] = Some(v),
            other => {
                answers.push(other);
                ok = false;
                break;
            }
        }
    }
    if ok {
        for e in &program.main {
            let a = m.run_top(e);
            let stop = !matches!(a, Answer::Val(_));
            answers.push(a);
            if stop {
                break;
            }
        }
    }
    let snapshots = m.snapshots.take().unwrap_or_default();
    (
        RunResult {
            answers,
            counters: m.counters,
            events: m.events,
        },
        snapshots,
    )
}
