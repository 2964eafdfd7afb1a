//! Size-change graphs: construction, composition, the descent and progress
//! predicates, incremental monitoring, and the closure-based static check.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::order::SizeRelation;

/// Arc label. `Strict` is the stronger fact and orders above `NonAscend`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Change {
    NonAscend = 1,
    Strict = 2,
}

impl Change {
    fn from_cell(c: u8) -> Option<Change> {
        match c {
            1 => Some(Change::NonAscend),
            2 => Some(Change::Strict),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Change::Strict => "<",
            Change::NonAscend => "<=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphArc {
    pub from: usize,
    pub change: Change,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("arity mismatch: expected {expected}, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("arc ({from}, {to}) out of range for arity {arity}")]
    OutOfRange { from: usize, to: usize, arity: usize },
    #[error("malformed graph text: {0}")]
    Syntax(String),
}

fn same_arity(expected: usize, found: usize) -> Result<(), GraphError> {
    if expected == found {
        Ok(())
    } else {
        Err(GraphError::ArityMismatch { expected, found })
    }
}

/// A size-change graph over `arity` parameters, stored as a dense matrix.
///
/// At most one arc is kept per `(from, to)` pair; a strict arc subsumes a
/// non-ascending one, so equal graphs have equal representations.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "GraphJson", try_from = "GraphJson")]
pub struct SCGraph {
    arity: usize,
    cells: SmallVec<[u8; 16]>,
}

impl SCGraph {
    pub fn empty(arity: usize) -> SCGraph {
        SCGraph {
            arity,
            cells: SmallVec::from_elem(0, arity * arity),
        }
    }

    pub fn from_arcs<I>(arity: usize, arcs: I) -> Result<SCGraph, GraphError>
    where
        I: IntoIterator<Item = (usize, Change, usize)>,
    {
        let mut g = SCGraph::empty(arity);
        for (from, change, to) in arcs {
            if from >= arity || to >= arity {
                return Err(GraphError::OutOfRange { from, to, arity });
            }
            g.add(from, change, to);
        }
        Ok(g)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn get(&self, from: usize, to: usize) -> Option<Change> {
        Change::from_cell(self.cells[from * self.arity + to])
    }

    /// Adds an arc, keeping the stronger label if one is already present.
    pub fn add(&mut self, from: usize, change: Change, to: usize) {
        let cell = &mut self.cells[from * self.arity + to];
        *cell = (*cell).max(change as u8);
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }

    /// Arcs in lexicographic `(from, to)` order.
    pub fn arcs(&self) -> impl Iterator<Item = GraphArc> + '_ {
        self.cells.iter().enumerate().filter_map(move |(idx, &c)| {
            Change::from_cell(c).map(|change| GraphArc {
                from: idx / self.arity,
                change,
                to: idx % self.arity,
            })
        })
    }

    pub fn arc_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    /// Sequential composition: `self` describes the first call, `next` the second.
    pub fn compose(&self, next: &SCGraph) -> Result<SCGraph, GraphError> {
        same_arity(self.arity, next.arity)?;
        Ok(self.then(next))
    }

    pub(crate) fn then(&self, next: &SCGraph) -> SCGraph {
        let n = self.arity;
        let mut out = SCGraph::empty(n);
        for i in 0..n {
            for j in 0..n {
                let a = self.cells[i * n + j];
                if a == 0 {
                    continue;
                }
                for k in 0..n {
                    let b = next.cells[j * n + k];
                    if b != 0 {
                        let cell = &mut out.cells[i * n + k];
                        *cell = (*cell).max(a.max(b));
                    }
                }
            }
        }
        out
    }

    pub fn is_idempotent(&self) -> bool {
        self.then(self) == *self
    }

    pub fn has_strict_self_arc(&self) -> bool {
        (0..self.arity).any(|i| self.get(i, i) == Some(Change::Strict))
    }

    /// `desc?`: false exactly when the graph is idempotent and has no strict
    /// self-arc.
    pub fn is_descending(&self) -> bool {
        !self.is_idempotent() || self.has_strict_self_arc()
    }
}

impl fmt::Debug for SCGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SCGraph({self})")
    }
}

/// Text form: `arity 2; 0 < 0, 0 <= 1`.
impl fmt::Display for SCGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arity {};", self.arity)?;
        for (n, a) in self.arcs().enumerate() {
            let sep = if n == 0 { " " } else { ", " };
            write!(f, "{sep}{} {} {}", a.from, a.change.symbol(), a.to)?;
        }
        Ok(())
    }
}

impl FromStr for SCGraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<SCGraph, GraphError> {
        let bad = || GraphError::Syntax(s.to_owned());
        let (head, body) = s.split_once(';').ok_or_else(bad)?;
        let arity: usize = head
            .trim()
            .strip_prefix("arity")
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        let mut arcs = Vec::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let mut words = part.split_whitespace();
            let (Some(i), Some(r), Some(j), None) =
                (words.next(), words.next(), words.next(), words.next())
            else {
                return Err(bad());
            };
            let change = match r {
                "<" => Change::Strict,
                "<=" => Change::NonAscend,
                _ => return Err(bad()),
            };
            arcs.push((
                i.parse().map_err(|_| bad())?,
                change,
                j.parse().map_err(|_| bad())?,
            ));
        }
        SCGraph::from_arcs(arity, arcs)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    arity: usize,
    arcs: Vec<(usize, String, usize)>,
}

impl From<SCGraph> for GraphJson {
    fn from(g: SCGraph) -> GraphJson {
        GraphJson {
            arity: g.arity,
            arcs: g
                .arcs()
                .map(|a| (a.from, a.change.symbol().to_owned(), a.to))
                .collect(),
        }
    }
}

impl TryFrom<GraphJson> for SCGraph {
    type Error = GraphError;

    fn try_from(j: GraphJson) -> Result<SCGraph, GraphError> {
        let arcs = j
            .arcs
            .into_iter()
            .map(|(i, r, k)| match r.as_str() {
                "<" => Ok((i, Change::Strict, k)),
                "<=" => Ok((i, Change::NonAscend, k)),
                _ => Err(GraphError::Syntax(r)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        SCGraph::from_arcs(j.arity, arcs)
    }
}

/// Builds the graph for a transition from `old` to `new` arguments: arc
/// `(i, r, j)` records how `new[j]` relates to `old[i]`.
pub fn build_graph<V, F>(old: &[V], new: &[V], mut cmp: F) -> Result<SCGraph, GraphError>
where
    F: FnMut(&V, &V) -> SizeRelation,
{
    same_arity(old.len(), new.len())?;
    let n = old.len();
    let mut g = SCGraph::empty(n);
    for (i, o) in old.iter().enumerate() {
        for (j, v) in new.iter().enumerate() {
            match cmp(v, o) {
                SizeRelation::StrictlyLess => g.add(i, Change::Strict, j),
                SizeRelation::Equal => g.add(i, Change::NonAscend, j),
                SizeRelation::Unknown => {}
            }
        }
    }
    Ok(g)
}

/// Reference `prog?`: every contiguous composition `g_i ; … ; g_j` is
/// descending.
pub fn prog(seq: &[SCGraph]) -> bool {
    first_violation(seq).is_none()
}

/// Shortest rejected prefix of `seq` under `prog?`, with the offending
/// composition (the first in graph order among those ending at that prefix).
pub fn first_violation(seq: &[SCGraph]) -> Option<(usize, SCGraph)> {
    for j in 0..seq.len() {
        let mut bad: Option<SCGraph> = None;
        let mut acc = seq[j].clone();
        for i in (0..=j).rev() {
            if i < j {
                acc = seq[i].then(&acc);
            }
            if !acc.is_descending() && bad.as_ref().is_none_or(|b| acc < *b) {
                bad = Some(acc.clone());
            }
        }
        if let Some(g) = bad {
            return Some((j + 1, g));
        }
    }
    None
}

/// Incremental `prog?` for one closure: the set of compositions of every
/// suffix of the graph sequence seen so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonitorState {
    arity: usize,
    n: u64,
    end_set: Arc<Vec<SCGraph>>,
}

/// The graph that made a monitored sequence fail `prog?`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepViolation {
    /// Idempotent composition lacking a strict self-arc.
    pub graph: SCGraph,
    /// Length of the graph sequence including the rejected step.
    pub index: u64,
}

pub fn monitor_init(arity: usize) -> MonitorState {
    MonitorState {
        arity,
        n: 0,
        end_set: Arc::new(Vec::new()),
    }
}

pub fn monitor_step(st: &MonitorState, g: &SCGraph) -> Result<Result<MonitorState, StepViolation>, GraphError> {
    let mut work = 0;
    st.step(g, &mut work)
}

impl MonitorState {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn end_set(&self) -> &[SCGraph] {
        &self.end_set
    }

    /// Extends the sequence with `g`. `work` grows by the number of
    /// compositions performed.
    pub fn step(
        &self,
        g: &SCGraph,
        work: &mut u64,
    ) -> Result<Result<MonitorState, StepViolation>, GraphError> {
        same_arity(self.arity, g.arity)?;
        let mut next: Vec<SCGraph> = Vec::with_capacity(self.end_set.len() + 1);
        for s in self.end_set.iter() {
            next.push(s.then(g));
        }
        *work += self.end_set.len() as u64 + 1;
        next.push(g.clone());
        next.sort_unstable();
        next.dedup();
        let n = self.n + 1;
        if let Some(bad) = next.iter().find(|s| !s.is_descending()) {
            return Ok(Err(StepViolation {
                graph: bad.clone(),
                index: n,
            }));
        }
        Ok(Ok(MonitorState {
            arity: self.arity,
            n,
            end_set: Arc::new(next),
        }))
    }
}

/// Least superset of `gs` closed under composition.
pub fn close_under_composition<'a, I>(gs: I) -> Result<BTreeSet<SCGraph>, GraphError>
where
    I: IntoIterator<Item = &'a SCGraph>,
{
    let mut set: BTreeSet<SCGraph> = BTreeSet::new();
    let mut arity = None;
    for g in gs {
        same_arity(*arity.get_or_insert(g.arity), g.arity)?;
        set.insert(g.clone());
    }
    let mut work: Vec<SCGraph> = set.iter().cloned().collect();
    while let Some(g) = work.pop() {
        let members: Vec<SCGraph> = set.iter().cloned().collect();
        for h in &members {
            for c in [g.then(h), h.then(&g)] {
                if set.insert(c.clone()) {
                    work.push(c);
                }
            }
        }
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scp {
    Holds,
    /// First member of the closure, in graph order, that is idempotent and
    /// lacks a strict self-arc.
    Violated(SCGraph),
}

pub fn scp_holds<'a, I>(gs: I) -> Result<Scp, GraphError>
where
    I: IntoIterator<Item = &'a SCGraph>,
{
    let closed = close_under_composition(gs)?;
    Ok(match closed.into_iter().find(|g| !g.is_descending()) {
        Some(w) => Scp::Violated(w),
        None => Scp::Holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Change::{NonAscend as N, Strict as S};

    fn g(arity: usize, arcs: &[(usize, Change, usize)]) -> SCGraph {
        SCGraph::from_arcs(arity, arcs.iter().copied()).unwrap()
    }

    const M: usize = 0;
    const NN: usize = 1;

    fn rel(a: i64, b: i64) -> SizeRelation {
        if a.abs() < b.abs() {
            SizeRelation::StrictlyLess
        } else if a == b {
            SizeRelation::Equal
        } else {
            SizeRelation::Unknown
        }
    }

    #[test]
    fn build_from_ack_calls() {
        let b = |o: [i64; 2], n: [i64; 2]| build_graph(&o, &n, |x, y| rel(*x, *y)).unwrap();
        assert_eq!(b([2, 0], [1, 1]), g(2, &[(M, S, M), (M, S, NN)]));
        assert_eq!(
            b([1, 1], [1, 0]),
            g(2, &[(M, N, M), (NN, N, M), (M, S, NN), (NN, S, NN)])
        );
        let e: [i64; 0] = [];
        assert_eq!(build_graph(&e, &e, |x, y| rel(*x, *y)).unwrap(), SCGraph::empty(0));
        assert!(build_graph(&[1i64], &[1, 2], |x, y| rel(*x, *y)).is_err());
    }

    #[test]
    fn compose_examples() {
        let g1 = g(2, &[(M, S, M)]);
        let g2 = g(2, &[(M, N, M), (NN, S, NN)]);
        assert_eq!(g1.compose(&g2).unwrap(), g1);
        assert_eq!(g1.compose(&SCGraph::empty(2)).unwrap(), SCGraph::empty(2));
        assert_eq!(
            g(2, &[(0, N, 1)]).compose(&g(2, &[(1, N, 0)])).unwrap(),
            g(2, &[(0, N, 0)])
        );
        assert!(g1.compose(&SCGraph::empty(3)).is_err());
    }

    #[test]
    fn descent() {
        assert!(g(2, &[(M, S, M)]).is_descending());
        assert!(!SCGraph::empty(2).is_descending());
        assert!(!g(2, &[(M, N, M), (NN, N, M)]).is_descending());
        let single = g(2, &[(0, S, 1)]);
        assert_eq!(single.then(&single), SCGraph::empty(2));
        assert!(single.is_descending());
    }

    #[test]
    fn prog_examples() {
        assert!(prog(&[g(2, &[(M, S, M), (M, S, NN)])]));
        assert!(prog(&[]));
        let seq = [
            g(2, &[(M, S, M), (M, S, NN)]),
            g(2, &[(M, N, M), (NN, N, M), (M, S, NN), (NN, S, NN)]),
            g(2, &[(M, N, M), (NN, N, M)]),
        ];
        assert!(prog(&seq[..2]));
        assert!(!prog(&seq));
    }

    #[test]
    fn monitor_examples() {
        let st = monitor_init(2);
        assert!(st.is_empty());
        assert!(monitor_init(0).end_set().is_empty());
        let ok = [
            g(2, &[(M, S, M), (M, S, NN)]),
            g(2, &[(M, N, M), (NN, N, M), (M, S, NN), (NN, S, NN)]),
            g(2, &[(M, S, M), (NN, S, M), (M, S, NN), (NN, S, NN)]),
        ];
        let mut st = monitor_init(2);
        for x in &ok {
            st = monitor_step(&st, x).unwrap().unwrap();
        }
        assert_eq!(st.len(), 3);

        let bug = g(2, &[(M, N, M), (NN, N, M)]);
        let st = monitor_init(2);
        let r = monitor_step(&st, &bug).unwrap();
        let v = r.expect_err("idempotent non-descending graph is rejected at once");
        assert_eq!(v.index, 1);
        assert!(v.graph.is_idempotent() && !v.graph.has_strict_self_arc());

        let down = g(1, &[(0, S, 0)]);
        let mut st = monitor_init(1);
        for _ in 0..100 {
            st = monitor_step(&st, &down).unwrap().unwrap();
        }
        assert_eq!(st.end_set(), &[down]);
    }

    #[test]
    fn closure_examples() {
        let g1 = g(2, &[(M, S, M)]);
        let g2 = g(2, &[(M, N, M), (NN, S, NN)]);
        let closed = close_under_composition([&g1, &g2]).unwrap();
        assert_eq!(closed.len(), 2);
        assert_eq!(scp_holds([&g1, &g2]).unwrap(), Scp::Holds);
        assert!(close_under_composition([]).unwrap().is_empty());
        let loopy = g(2, &[(M, N, M)]);
        assert_eq!(scp_holds([&loopy]).unwrap(), Scp::Violated(loopy.clone()));
        let a = g(2, &[(0, S, 1)]);
        let b = g(2, &[(1, S, 0)]);
        let closed = close_under_composition([&a, &b]).unwrap();
        assert!(closed.contains(&g(2, &[(0, S, 0)])));
        assert!(closed.contains(&g(2, &[(1, S, 1)])));
        assert!(closed.contains(&SCGraph::empty(2)));
        assert_eq!(closed.len(), 5);
    }

    #[test]
    fn text_and_json_round_trip() {
        let x = g(2, &[(M, N, M), (NN, S, NN)]);
        assert_eq!(x.to_string(), "arity 2; 0 <= 0, 1 < 1");
        assert_eq!(x.to_string().parse::<SCGraph>().unwrap(), x);
        assert_eq!(SCGraph::empty(3).to_string(), "arity 3;");
        assert_eq!("arity 3;".parse::<SCGraph>().unwrap(), SCGraph::empty(3));
        let j = serde_json::to_string(&x).unwrap();
        assert_eq!(j, r#"{"arity":2,"arcs":[[0,"<=",0],[1,"<",1]]}"#);
        assert_eq!(serde_json::from_str::<SCGraph>(&j).unwrap(), x);
        assert!("arity 1; 0 < 3".parse::<SCGraph>().is_err());
    }
}
