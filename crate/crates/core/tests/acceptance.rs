//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::strategy::Strategy;
use proptest::test_runner::{Config as RunnerConfig, TestCaseError, TestRunner};
use sct_core::corpus::{self, Expect};
use sct_core::interp::EventOutcome;
use sct_core::scgraph::first_violation;
use sct_core::verify::{Verdict, DEFAULT_FUEL};
use sct_core::*;

use common::{arb_graph, arb_seq, path_oracle};

const ONE_SECOND: Duration = Duration::from_secs(1);
const FIVE_SECONDS: Duration = Duration::from_secs(5);
const DIVERGE_CEILING: u64 = 1_000_000;
const NFA_CEILING: u64 = 10_000;
const TAIL_ITERATIONS: u64 = 1_000_000;
const FRAME_BOUND: u64 = 16;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn graph(arity: usize, arcs: &[(usize, Change, usize)]) -> SCGraph {
    SCGraph::from_arcs(arity, arcs.iter().copied()).unwrap()
}

fn program(name: &str) -> Program {
    corpus::find(name)
        .unwrap_or_else(|| panic!("corpus entry {name}"))
        .load()
        .unwrap()
}

fn ackermann(m: u64, n: u64) -> u64 {
    match (m, n) {
        (0, n) => n + 1,
        (m, 0) => ackermann(m - 1, 1),
        (m, n) => ackermann(m - 1, ackermann(m, n - 1)),
    }
}

fn golden_ack() -> Outcome {
    let t = Instant::now();
    let p = program("ack");
    let r = run(&p, &Config::new(Mode::MonitorWhole).record_events(true));
    let elapsed = t.elapsed();
    let want = ackermann(2, 0).to_string();
    ensure!(r.answer().to_string() == want, "answer {} ≠ {want}", r.answer());
    let first = r.events.iter().find_map(|e| match &e.outcome {
        EventOutcome::Checked(g) => Some(g.clone()),
        _ => None,
    });
    let expected = graph(2, &[(0, Change::Strict, 0), (0, Change::Strict, 1)]);
    ensure!(first.as_ref() == Some(&expected), "first graph {first:?}");
    ensure!(elapsed < ONE_SECOND, "took {elapsed:?}");
    Ok(format!("(ack 2 0) = {want}, first graph {{{expected}}}, {elapsed:?}"))
}

fn golden_buggy_ack() -> Outcome {
    let p = program("ack-buggy");
    let a = eval_monitored(&p, Policy::Always, true);
    let e = a.sc_error().ok_or_else(|| format!("answer {a}"))?;
    let w = &e.report.graph;
    ensure!(w.is_idempotent() && !w.has_strict_self_arc(), "witness {w}");
    ensure!(e.report.call_index <= 3, "detected at call {}", e.report.call_index);
    ensure!(
        e.report.args == [Value::int(1), Value::int(2)],
        "args {:?}",
        e.report.args
    );
    Ok(format!("witness {{{w}}} at call {}", e.report.call_index))
}

fn contract_blame() -> Outcome {
    let t = Instant::now();
    let p = program("fig2-c2");
    let r = run(&p, &Config::new(Mode::Monitor));
    let elapsed = t.elapsed();
    ensure!(r.answers.len() == 2, "{} answers", r.answers.len());
    ensure!(r.answers[0].value().is_some(), "c1 gave {}", r.answers[0]);
    let e = r.answers[1].sc_error().ok_or_else(|| format!("c2 gave {}", r.answers[1]))?;
    ensure!(e.blame.to_string() == "c2", "blamed {}", e.blame);
    ensure!(elapsed < ONE_SECOND, "took {elapsed:?}");
    Ok(format!("c1 → {}, c2 blamed, {elapsed:?}", r.answers[0]))
}

fn cps_len() -> Outcome {
    let p = program("len-cps");
    let r = run(&p, &Config::new(Mode::MonitorWhole).record_events(true));
    ensure!(r.answer().to_string() == "2", "answer {}", r.answer());
    let violations = r
        .events
        .iter()
        .filter(|e| matches!(e.outcome, EventOutcome::Violation(_)))
        .count();
    ensure!(violations == 0, "{violations} violations");
    let keys: HashSet<_> = r
        .events
        .iter()
        .filter(|e| e.closure.as_str() == "len-cps:7")
        .map(|e| e.key.clone())
        .collect();
    ensure!(keys.len() >= 2, "{} continuation keys", keys.len());
    Ok(format!("(len '(2 1)) = 2, {} continuation keys", keys.len()))
}

fn static_ack() -> Outcome {
    let t = Instant::now();
    let p = program("ack");
    let r = verify_termination(&p, "ack", DEFAULT_FUEL).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure!(r.is_verified(), "{}", r.name());
    let want: std::collections::BTreeSet<SCGraph> = [
        graph(2, &[(0, Change::Strict, 0)]),
        graph(2, &[(0, Change::NonAscend, 0), (1, Change::Strict, 1)]),
    ]
    .into();
    let got: Vec<_> = r.graphs.values().collect();
    ensure!(got == [&want], "graphs {got:?}");
    ensure!(elapsed < ONE_SECOND, "took {elapsed:?}");
    Ok(format!("verified with {} graphs, {elapsed:?}", want.len()))
}

fn nfa_bug() -> Outcome {
    let p = program("nfa");
    let r = verify_termination(&p, "state1", DEFAULT_FUEL).map_err(|e| e.to_string())?;
    let Verdict::Refuted { witness, .. } = &r.verdict else {
        return Err(format!("static result {}", r.name()));
    };
    ensure!(
        witness.get(0, 0) == Some(Change::NonAscend),
        "witness {witness}"
    );
    let dynamic = program("nfa-c");
    let cfg = Config::new(Mode::MonitorWhole).max_steps(Some(NFA_CEILING));
    let a = run(&dynamic, &cfg).answer();
    ensure!(a.sc_error().is_some(), "dynamic answer {a}");
    Ok(format!("refuted with {{{witness}}}; (state1 \"cab\") caught"))
}

fn monitoring_preserves_answers() -> Outcome {
    let t = Instant::now();
    let mut n = 0;
    for cp in corpus::with_expect(Expect::Terminates) {
        let p = cp.load().map_err(|e| e.to_string())?;
        let std = eval_standard(&p, None);
        ensure!(std.value().is_some(), "{}: standard gave {std}", cp.name);
        let mon = eval_monitored(&p, Policy::Always, true);
        ensure!(mon == std, "{}: {mon} ≠ {std}", cp.name);
        n += 1;
    }
    let elapsed = t.elapsed();
    ensure!(n == 11, "{n} terminating programs");
    ensure!(elapsed < FIVE_SECONDS, "took {elapsed:?}");
    Ok(format!("{n} programs agree, {elapsed:?}"))
}

fn divergence_is_caught() -> Outcome {
    let mut names = Vec::new();
    for cp in corpus::with_expect(Expect::Diverges) {
        let p = cp.load().map_err(|e| e.to_string())?;
        let cfg = Config::new(Mode::MonitorWhole).max_steps(Some(DIVERGE_CEILING));
        let r = run(&p, &cfg);
        let a = r.answer();
        ensure!(a.sc_error().is_some(), "{}: {a}", cp.name);
        ensure!(r.counters.steps < DIVERGE_CEILING, "{}: ceiling reached", cp.name);
        names.push(cp.name);
    }
    for required in ["omega", "ack-buggy", "fig2-c2", "interp-omega"] {
        ensure!(names.contains(&required), "{required} missing");
    }
    Ok(format!("{} programs stopped: {}", names.len(), names.join(", ")))
}

fn ascend_then_stop() -> Outcome {
    let p = program("ascend-then-stop");
    let std = eval_standard(&p, None);
    ensure!(std.value().is_some(), "standard gave {std}");
    let t = eval_traced(&p, None);
    ensure!(t.any_prog_failure(), "no failing snapshot");
    let mon = eval_monitored(&p, Policy::Always, true);
    ensure!(mon.sc_error().is_some(), "monitored gave {mon}");
    Ok(format!("standard {std}, trace fails, monitor rejects"))
}

fn algebra() -> Outcome {
    let mut runner = TestRunner::new(RunnerConfig {
        cases: 10_000,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    let triples = (1usize..=4).prop_flat_map(|n| (arb_graph(n), arb_graph(n), arb_graph(n)));
    runner
        .run(&triples, |(a, b, c)| {
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            if left != right || left != path_oracle(&[&a, &b, &c]) {
                return Err(TestCaseError::fail(format!("{a} ; {b} ; {c}")));
            }
            Ok(())
        })
        .map_err(|e| format!("composition: {e}"))?;

    let mut runner = TestRunner::new(RunnerConfig {
        cases: 1_000,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    runner
        .run(&arb_seq(8), |seq| {
            let mut st = monitor_init(seq.first().map_or(1, SCGraph::arity));
            let mut rejected = None;
            for g in &seq {
                match monitor_step(&st, g).unwrap() {
                    Ok(next) => st = next,
                    Err(v) => {
                        rejected = Some((v.index as usize, v.graph));
                        break;
                    }
                }
            }
            if rejected.is_none() != prog(&seq) || rejected != first_violation(&seq) {
                return Err(TestCaseError::fail(format!("{seq:?}")));
            }
            Ok(())
        })
        .map_err(|e| format!("monitor: {e}"))?;
    Ok("10000 triples associative, 1000 sequences agree".to_owned())
}

fn overhead_order() -> Outcome {
    let ratio = |name: &str| {
        let p = program(name);
        let std = run(&p, &Config::new(Mode::Standard));
        let mon = run(&p, &Config::new(Mode::MonitorWhole));
        (
            mon.counters.cost() as f64 / std.counters.cost() as f64,
            std.answer() == mon.answer(),
        )
    };
    let (sum, sum_ok) = ratio("sum");
    let (fact, fact_ok) = ratio("fact");
    ensure!(sum_ok && fact_ok, "answers differ under monitoring");
    ensure!(sum > fact && fact >= 1.0, "ratio(sum) {sum:.3}, ratio(fact) {fact:.3}");
    let p = program("sum");
    let always = run(&p, &Config::new(Mode::MonitorWhole));
    let backoff = run(&p, &Config::new(Mode::MonitorWhole).policy(Policy::Backoff(1)));
    ensure!(
        backoff.counters.checks < always.counters.checks,
        "backoff {} checks, always {}",
        backoff.counters.checks,
        always.counters.checks
    );
    ensure!(backoff.answer() == always.answer(), "verdicts differ");
    Ok(format!(
        "ratio(sum) {sum:.3} > ratio(fact) {fact:.3}; checks {} < {}",
        backoff.counters.checks, always.counters.checks
    ))
}

fn tail_calls() -> Outcome {
    let text = |n: u64| {
        format!("(define (loop n acc) (if (= n 0) acc (loop (- n 1) (+ acc 1))))\n(loop {n} 0)")
    };
    let go = |n: u64| {
        let p = load_program("tail", &text(n)).unwrap();
        run(&p, &Config::new(Mode::MonitorWhole).max_steps(None))
    };
    let small = go(TAIL_ITERATIONS / 100);
    let big = go(TAIL_ITERATIONS);
    ensure!(
        big.answer().to_string() == TAIL_ITERATIONS.to_string(),
        "answer {}",
        big.answer()
    );
    let c = big.counters;
    ensure!(c.max_frames <= FRAME_BOUND, "{} frames", c.max_frames);
    ensure!(
        (c.max_frames, c.max_entries, c.max_end_set)
            == (small.counters.max_frames, small.counters.max_entries, small.counters.max_end_set),
        "footprint grows with iterations: {:?} vs {:?}",
        small.counters,
        c
    );
    Ok(format!(
        "{TAIL_ITERATIONS} iterations, {} frames, {} entries, end-set {}",
        c.max_frames, c.max_entries, c.max_end_set
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("golden ack run", golden_ack),
        ("golden buggy ack", golden_buggy_ack),
        ("contract blame", contract_blame),
        ("cps len", cps_len),
        ("static ack", static_ack),
        ("nfa bug", nfa_bug),
        ("monitoring preserves answers", monitoring_preserves_answers),
        ("divergence is caught", divergence_is_caught),
        ("ascend then stop", ascend_then_stop),
        ("graph algebra", algebra),
        ("overhead ordering", overhead_order),
        ("tail calls", tail_calls),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
