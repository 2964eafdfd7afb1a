//! Generators and oracles shared by the property and acceptance suites.

#![allow(dead_code)]

use proptest::prelude::*;
use sct_core::*;

pub fn arb_graph(arity: usize) -> impl Strategy<Value = SCGraph> {
    prop::collection::vec(0u8..3, arity * arity).prop_map(move |cells| {
        let arcs = cells.iter().enumerate().filter_map(|(k, &c)| {
            let change = match c {
                1 => Change::NonAscend,
                2 => Change::Strict,
                _ => return None,
            };
            Some((k / arity, change, k % arity))
        });
        SCGraph::from_arcs(arity, arcs).unwrap()
    })
}

pub fn arb_seq(max_len: usize) -> impl Strategy<Value = Vec<SCGraph>> {
    (1usize..=3).prop_flat_map(move |n| prop::collection::vec(arb_graph(n), 0..=max_len))
}

/// Composition by enumerating every path through the sequence: an arc
/// `i → k` exists when some path does, and is strict when some path has a
/// strict step.
pub fn path_oracle(seq: &[&SCGraph]) -> SCGraph {
    let n = seq[0].arity();
    let mut out = SCGraph::empty(n);
    fn walk(seq: &[&SCGraph], at: usize, strict: bool, from: usize, out: &mut SCGraph) {
        let Some((g, rest)) = seq.split_first() else {
            let c = if strict { Change::Strict } else { Change::NonAscend };
            out.add(from, c, at);
            return;
        };
        for to in 0..g.arity() {
            if let Some(c) = g.get(at, to) {
                walk(rest, to, strict || c == Change::Strict, from, out);
            }
        }
    }
    for i in 0..n {
        walk(seq, i, false, i, &mut out);
    }
    out
}

pub fn arb_datum() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        (-1000i64..1000).prop_map(Value::int),
        Just(Value::Nil),
    ];
    leaf.prop_recursive(4, 24, 4, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, d)| Value::cons(a, d)),
            prop::collection::vec(inner, 0..4).prop_map(Value::list),
        ]
    })
}
