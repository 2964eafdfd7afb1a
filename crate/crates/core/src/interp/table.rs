//! The size-change table: for each closure applied in the current dynamic
//! extent, its latest (checkpoint) arguments and the monitoring state of its
//! graph sequence.
//!
//! The table is mutated in place. Writes made inside a non-tail call are
//! recorded on a trail and undone when the call returns, so the caller sees
//! exactly the table it had before the call. Each entry remembers the extent
//! in which it was last saved, so repeated writes to one key inside one extent
//! cost a single trail record.

use std::collections::HashMap;
use std::sync::Arc;

use crate::order::ValueOrder;
use crate::scgraph::{build_graph, monitor_init, MonitorState, SCGraph};
use crate::value::{ClosureKey, Label, Value};

use super::{Counters, Policy};

/// A persistent graph sequence in call order, shared between trace snapshots.
#[derive(Clone, Debug, Default)]
pub struct GraphSeq(Option<Arc<SeqNode>>);

#[derive(Debug)]
struct SeqNode {
    graph: SCGraph,
    len: usize,
    prev: Option<Arc<SeqNode>>,
}

impl Drop for SeqNode {
    fn drop(&mut self) {
        let mut next = self.prev.take();
        while let Some(node) = next {
            match Arc::try_unwrap(node) {
                Ok(mut node) => next = node.prev.take(),
                Err(_) => break,
            }
        }
    }
}

impl GraphSeq {
    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn push(&self, graph: SCGraph) -> GraphSeq {
        GraphSeq(Some(Arc::new(SeqNode {
            graph,
            len: self.len() + 1,
            prev: self.0.clone(),
        })))
    }

    pub fn to_vec(&self) -> Vec<SCGraph> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = self.0.as_deref();
        while let Some(n) = cur {
            out.push(n.graph.clone());
            cur = n.prev.as_deref();
        }
        out.reverse();
        out
    }

    /// Identity of the underlying storage, for memoizing per-sequence work.
    pub fn id(&self) -> usize {
        self.0.as_ref().map_or(0, |n| Arc::as_ptr(n) as usize)
    }
}

#[derive(Clone, Debug)]
pub struct Entry {
    /// Arguments at the latest checkpoint. Every call is a checkpoint under
    /// [`Policy::Always`] and in traces.
    pub args: Arc<[Value]>,
    /// Applications of this key in the current extent, including the first.
    pub calls: u64,
    pub monitor: MonitorState,
    /// Full graph sequence, kept only when tracing.
    pub raw: Option<GraphSeq>,
    /// Insertion order, for deterministic listings.
    pub seq: u64,
    saved_at: u64,
}

/// Diagnostic for a size-change violation.
#[derive(Clone, Debug, PartialEq)]
pub struct ViolationReport {
    /// Idempotent composition with no strict self-arc.
    pub graph: SCGraph,
    /// Graph of the transition that completed the violating sequence.
    pub transition: SCGraph,
    pub closure: Label,
    pub key: ClosureKey,
    /// Per-key call index at detection; the first application is 1.
    pub call_index: u64,
    pub args: Vec<Value>,
}

/// What `upd` did with one application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UpdOutcome {
    /// First application of the key in this extent.
    Fresh,
    /// Not a checkpoint under the backoff policy.
    Skipped,
    /// Graph built and accepted.
    Checked(SCGraph),
    /// Monitoring disabled.
    Off,
}

pub(crate) struct Mark {
    trail_len: usize,
    prev_gen: u64,
}

#[derive(Default)]
pub struct SCTable {
    entries: HashMap<ClosureKey, Entry>,
    trail: Vec<(ClosureKey, Option<Entry>)>,
    gen: u64,
    next_gen: u64,
    next_seq: u64,
}

fn is_checkpoint(policy: Policy, call: u64) -> bool {
    match policy {
        Policy::Always => true,
        Policy::Off => false,
        Policy::Backoff(base) => {
            let base = base.max(1);
            call.is_multiple_of(base) && (call / base).is_power_of_two()
        }
    }
}

impl SCTable {
    pub fn new() -> SCTable {
        SCTable::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &ClosureKey) -> Option<&Entry> {
        self.entries.get(key)
    }

    /// Entries in insertion order.
    pub fn entries(&self) -> Vec<(&ClosureKey, &Entry)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by_key(|(_, e)| e.seq);
        v
    }

    pub(crate) fn enter(&mut self) -> Mark {
        let mark = Mark {
            trail_len: self.trail.len(),
            prev_gen: self.gen,
        };
        self.next_gen += 1;
        self.gen = self.next_gen;
        mark
    }

    pub(crate) fn leave(&mut self, mark: Mark) {
        while self.trail.len() > mark.trail_len {
            let (key, old) = self.trail.pop().expect("length checked");
            match old {
                Some(e) => {
                    self.entries.insert(key, e);
                }
                None => {
                    self.entries.remove(&key);
                }
            }
        }
        self.gen = mark.prev_gen;
    }

    #[cfg(test)]
    pub(crate) fn trail_len(&self) -> usize {
        self.trail.len()
    }

    fn save(&mut self, key: &ClosureKey) {
        if self.gen == 0 {
            return;
        }
        match self.entries.get(key) {
            Some(e) if e.saved_at == self.gen => {}
            Some(e) => self.trail.push((key.clone(), Some(e.clone()))),
            None => self.trail.push((key.clone(), None)),
        }
    }

    fn insert_fresh(&mut self, key: &ClosureKey, args: &[Value], trace: bool) {
        self.save(key);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.entries.insert(
            key.clone(),
            Entry {
                args: Arc::from(args),
                calls: 1,
                monitor: monitor_init(args.len()),
                raw: trace.then(GraphSeq::default),
                seq,
                saved_at: self.gen,
            },
        );
    }

    fn entry_mut(&mut self, key: &ClosureKey) -> &mut Entry {
        self.save(key);
        let gen = self.gen;
        let e = self.entries.get_mut(key).expect("caller checked presence");
        e.saved_at = gen;
        e
    }

    /// Records an application of `key` to `args` and checks the size-change
    /// property of the extended sequence. On violation the table is left
    /// unchanged.
    pub fn upd(
        &mut self,
        key: &ClosureKey,
        args: &[Value],
        policy: Policy,
        order: &dyn ValueOrder,
        counters: &mut Counters,
    ) -> Result<UpdOutcome, Box<ViolationReport>> {
        if policy == Policy::Off {
            return Ok(UpdOutcome::Off);
        }
        let Some(entry) = self.entries.get(key) else {
            self.insert_fresh(key, args, false);
            counters.max_entries = counters.max_entries.max(self.entries.len() as u64);
            return Ok(UpdOutcome::Fresh);
        };
        let call = entry.calls + 1;
        if !is_checkpoint(policy, call) {
            self.entry_mut(key).calls = call;
            return Ok(UpdOutcome::Skipped);
        }
        let g = transition_graph(&entry.args, args, order, counters);
        counters.checks += 1;
        let step = entry
            .monitor
            .step(&g, &mut counters.compose_work)
            .expect("closure arity is fixed");
        match step {
            Ok(monitor) => {
                let kept = monitor.end_set().len() as u64;
                counters.max_end_set = counters.max_end_set.max(kept);
                let e = self.entry_mut(key);
                e.calls = call;
                e.args = Arc::from(args);
                e.monitor = monitor;
                Ok(UpdOutcome::Checked(g))
            }
            Err(v) => Err(Box::new(ViolationReport {
                graph: v.graph,
                transition: g,
                closure: key.label().clone(),
                key: key.clone(),
                call_index: call,
                args: args.to_vec(),
            })),
        }
    }

    /// Records an application without guarding: the graph is appended to the
    /// raw sequence whatever it is.
    pub fn ext(
        &mut self,
        key: &ClosureKey,
        args: &[Value],
        order: &dyn ValueOrder,
        counters: &mut Counters,
    ) -> Option<SCGraph> {
        let Some(entry) = self.entries.get(key) else {
            self.insert_fresh(key, args, true);
            return None;
        };
        let g = transition_graph(&entry.args, args, order, counters);
        let e = self.entry_mut(key);
        e.calls += 1;
        e.args = Arc::from(args);
        let raw = e.raw.take().unwrap_or_default();
        e.raw = Some(raw.push(g.clone()));
        Some(g)
    }
}

fn transition_graph(
    old: &[Value],
    new: &[Value],
    order: &dyn ValueOrder,
    counters: &mut Counters,
) -> SCGraph {
    counters.graphs_built += 1;
    let work = &mut counters.compare_work;
    build_graph(old, new, |n, o| order.relate(n, o, work)).expect("closure arity is fixed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::DefaultOrder;

    #[test]
    fn checkpoints() {
        let hits: Vec<u64> = (1..=20).filter(|&c| is_checkpoint(Policy::Backoff(1), c)).collect();
        assert_eq!(hits, [1, 2, 4, 8, 16]);
        let hits: Vec<u64> = (1..=40).filter(|&c| is_checkpoint(Policy::Backoff(3), c)).collect();
        assert_eq!(hits, [3, 6, 12, 24]);
        assert!((1..100).all(|c| is_checkpoint(Policy::Always, c)));
    }

    #[test]
    fn graph_seq_is_persistent() {
        let a = GraphSeq::default();
        let b = a.push(SCGraph::empty(1));
        let c = b.push(SCGraph::empty(2));
        assert_eq!(a.len(), 0);
        assert_eq!(b.to_vec(), vec![SCGraph::empty(1)]);
        assert_eq!(c.len(), 2);
        let mut long = GraphSeq::default();
        for _ in 0..300_000 {
            long = long.push(SCGraph::empty(0));
        }
        drop(long);
    }

    #[test]
    fn trail_restores_caller_table() {
        let prog = crate::reader::load_program("t", "(define (f x) x)").unwrap();
        let crate::expr::Expr::Lam(lam) = &prog.globals[0].expr else {
            panic!()
        };
        let clo = Arc::new(crate::value::Closure::new(lam.clone(), Box::new([])));
        let key = crate::value::closure_key(&clo);
        let mut t = SCTable::new();
        let mut c = Counters::default();
        let o = DefaultOrder;
        t.upd(&key, &[Value::int(5)], Policy::Always, &o, &mut c).unwrap();
        let mark = t.enter();
        t.upd(&key, &[Value::int(4)], Policy::Always, &o, &mut c).unwrap();
        t.upd(&key, &[Value::int(3)], Policy::Always, &o, &mut c).unwrap();
        assert_eq!(t.trail_len(), 1);
        assert_eq!(t.get(&key).unwrap().calls, 3);
        t.leave(mark);
        assert_eq!(t.get(&key).unwrap().calls, 1);
        assert_eq!(&*t.get(&key).unwrap().args, &[Value::int(5)]);
        let v = t
            .upd(&key, &[Value::int(5)], Policy::Always, &o, &mut c)
            .unwrap_err();
        assert_eq!(v.call_index, 2);
    }
}
