mod common;

use common::{arb_datum, arb_graph, arb_seq, path_oracle};

use proptest::prelude::*;
use sct_core::scgraph::first_violation;
use sct_core::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn composition_is_associative(
        (a, b, c) in (1usize..=4).prop_flat_map(|n| (arb_graph(n), arb_graph(n), arb_graph(n)))
    ) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(&left, &path_oracle(&[&a, &b, &c]));
        prop_assert_eq!(a.compose(&b).unwrap(), path_oracle(&[&a, &b]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn monitor_agrees_with_prog(seq in arb_seq(8)) {
        let arity = seq.first().map_or(1, SCGraph::arity);
        let mut st = monitor_init(arity);
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
        prop_assert_eq!(rejected.is_none(), prog(&seq));
        prop_assert_eq!(rejected, first_violation(&seq));
    }

    #[test]
    fn closure_is_a_fixpoint(gs in (1usize..=3).prop_flat_map(|n| prop::collection::vec(arb_graph(n), 1..4))) {
        let closed = close_under_composition(&gs).unwrap();
        for g in &gs {
            prop_assert!(closed.contains(g));
        }
        for a in &closed {
            for b in &closed {
                prop_assert!(closed.contains(&a.compose(b).unwrap()));
            }
        }
        prop_assert_eq!(close_under_composition(&closed).unwrap(), closed);
    }

    #[test]
    fn scp_implies_every_sequence_progresses(
        (gs, picks) in (1usize..=3).prop_flat_map(|n| (
            prop::collection::vec(arb_graph(n), 1..4),
            prop::collection::vec(any::<prop::sample::Index>(), 0..10),
        ))
    ) {
        if scp_holds(&gs).unwrap() == Scp::Holds {
            let seq: Vec<SCGraph> = picks.iter().map(|i| gs[i.index(gs.len())].clone()).collect();
            prop_assert!(prog(&seq));
        }
    }

    #[test]
    fn built_graphs_match_the_order(
        (old, new) in (1usize..=4).prop_flat_map(|n| (
            prop::collection::vec(arb_datum(), n),
            prop::collection::vec(arb_datum(), n),
        ))
    ) {
        let g = build_graph(&old, &new, |v, o| DefaultOrder.relate(v, o, &mut 0)).unwrap();
        for (i, o) in old.iter().enumerate() {
            for (j, v) in new.iter().enumerate() {
                let want = if precedes(v, o) {
                    Some(Change::Strict)
                } else if v == o {
                    Some(Change::NonAscend)
                } else {
                    None
                };
                prop_assert_eq!(g.get(i, j), want);
            }
        }
    }

    #[test]
    fn order_is_a_strict_partial_order(a in arb_datum(), b in arb_datum(), c in arb_datum()) {
        prop_assert!(!precedes(&a, &a));
        prop_assert!(!(precedes(&a, &b) && precedes(&b, &a)));
        if precedes(&a, &b) && precedes(&b, &c) {
            prop_assert!(precedes(&a, &c));
        }
        prop_assert!(precedes(&a, &Value::cons(a.clone(), b.clone())));
    }

    #[test]
    fn printed_data_reads_back(v in arb_datum()) {
        let text = format!("'{}", print_value(&v));
        let p = load_program("t", &text).unwrap();
        prop_assert_eq!(eval_standard(&p, None), Answer::Val(v));
    }

    #[test]
    fn graph_text_and_json_round_trip(g in (1usize..=4).prop_flat_map(arb_graph)) {
        prop_assert_eq!(&g.to_string().parse::<SCGraph>().unwrap(), &g);
        let j = serde_json::to_string(&g).unwrap();
        prop_assert_eq!(serde_json::from_str::<SCGraph>(&j).unwrap(), g);
    }
}
