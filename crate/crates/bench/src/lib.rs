//! Fixtures shared by the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sct_core::corpus;
use sct_core::{Change, Program, SCGraph};

/// A corpus program with its top-level expressions replaced by `main`.
pub fn corpus_with_main(name: &str, main: &str) -> Program {
    let cp = corpus::find(name).unwrap_or_else(|| panic!("no corpus entry {name}"));
    sct_core::load_with_main(cp.file, cp.text, main).expect("corpus program loads")
}

/// `count` pseudo-random graphs of one arity, each cell empty with
/// probability one half.
pub fn random_graphs(arity: usize, count: usize, seed: u64) -> Vec<SCGraph> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut g = SCGraph::empty(arity);
            for i in 0..arity {
                for j in 0..arity {
                    match rng.random_range(0..4) {
                        0 => g.add(i, Change::Strict, j),
                        1 => g.add(i, Change::NonAscend, j),
                        _ => {}
                    }
                }
            }
            g
        })
        .collect()
}
