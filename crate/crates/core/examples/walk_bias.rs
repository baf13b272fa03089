//! Shows how the return parameter `p` and in-out parameter `q` bias a
//! second-order random walk, comparing sampled transition frequencies with
//! the normalized weights.
//!
//! ```bash
//! cargo run --example walk_bias
//! ```

use std::collections::BTreeMap;

use cvdp::embedding::{next_step, transition_weights};
use cvdp::graph::SimpleDigraph;
use cvdp::seed;

fn main() {
    // The walk has just moved a -> b. From b it can return to a, move to c
    // (also adjacent to a) or move outward to d or e.
    let edges = [("a", "b"), ("b", "a"), ("b", "c"), ("b", "d"), ("b", "e"), ("a", "c"), ("c", "b"), ("d", "b"), ("e", "b")];
    let names = ["a", "b", "c", "d", "e"].map(String::from).to_vec();
    let g = SimpleDigraph::from_edges(names, edges.iter().copied());
    let (a, b) = (g.index_of("a").unwrap(), g.index_of("b").unwrap());
    let steps = 100_000;

    for (p, q) in [(1.0, 1.0), (0.25, 4.0), (4.0, 0.25)] {
        let weights = transition_weights(&g, Some(a), b, p, q);
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        let mut rng = seed::rng(7, &[]);
        let mut counts = BTreeMap::<usize, usize>::new();
        for _ in 0..steps {
            *counts.entry(next_step(&g, Some(a), b, p, q, &mut rng).unwrap()).or_default() += 1;
        }
        println!("p={p} q={q}");
        for (x, w) in weights {
            println!(
                "  b -> {}: expected {:.3}, sampled {:.3}",
                g.name(x),
                w / total,
                counts.get(&x).copied().unwrap_or(0) as f64 / steps as f64
            );
        }
    }
}
