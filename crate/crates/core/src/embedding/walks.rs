//! Second-order biased random walks.
//!
//! From the current node `v`, having arrived from `t`, the unnormalized
//! weight of moving to an out-neighbor `x` is `1/p` when `x == t`, `1` when
//! `t -> x` is an edge, and `1/q` otherwise. The first step of a walk is
//! uniform over out-neighbors. Walks stop early at nodes without
//! out-edges.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::graph::SimpleDigraph;
use crate::seed::{self, stream};

/// Unnormalized transition weights out of `cur` given the previous node.
pub fn transition_weights(
    g: &SimpleDigraph,
    prev: Option<usize>,
    cur: usize,
    p: f64,
    q: f64,
) -> Vec<(usize, f64)> {
    g.successors(cur)
        .iter()
        .map(|&x| {
            let w = match prev {
                None => 1.0,
                Some(t) if x == t => 1.0 / p,
                Some(t) if g.has_edge(t, x) => 1.0,
                Some(_) => 1.0 / q,
            };
            (x, w)
        })
        .collect()
}

/// Samples the next node of a walk, or `None` at a sink.
pub fn next_step<R: Rng + ?Sized>(
    g: &SimpleDigraph,
    prev: Option<usize>,
    cur: usize,
    p: f64,
    q: f64,
    rng: &mut R,
) -> Option<usize> {
    let succ = g.successors(cur);
    match succ.len() {
        0 => None,
        1 => Some(succ[0]),
        _ if prev.is_none() || (p == 1.0 && q == 1.0) => Some(succ[rng.gen_range(0..succ.len())]),
        _ => {
            let weights = transition_weights(g, prev, cur, p, q);
            let total: f64 = weights.iter().map(|(_, w)| w).sum();
            let mut r = rng.gen::<f64>() * total;
            for &(x, w) in &weights {
                if r < w {
                    return Some(x);
                }
                r -= w;
            }
            weights.last().map(|&(x, _)| x)
        }
    }
}

/// One walk of at most `length` nodes from `start`.
pub fn walk_from<R: Rng + ?Sized>(
    g: &SimpleDigraph,
    start: usize,
    length: usize,
    p: f64,
    q: f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut walk = Vec::with_capacity(length);
    walk.push(start);
    let mut prev = None;
    while walk.len() < length {
        let cur = *walk.last().unwrap();
        match next_step(g, prev, cur, p, q, rng) {
            Some(x) => {
                prev = Some(cur);
                walk.push(x);
            }
            None => break,
        }
    }
    walk
}

/// `walks_per_node` rounds; each round visits every node once in a seeded
/// shuffled order. Each walk has its own derived seed, so the result does
/// not depend on the thread count.
pub fn sample_walks(
    g: &SimpleDigraph,
    walks_per_node: usize,
    walk_length: usize,
    p: f64,
    q: f64,
    seed: u64,
) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut jobs = Vec::with_capacity(n * walks_per_node);
    for round in 0..walks_per_node {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed, &[stream::WALK_ORDER, round as u64]));
        jobs.extend(order.into_iter().map(|v| (round, v)));
    }
    jobs.par_iter()
        .map(|&(round, v)| {
            let mut rng = seed::rng(seed, &[stream::WALK, round as u64, v as u64]);
            walk_from(g, v, walk_length, p, q, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digraph(n: usize, edges: &[(usize, usize)]) -> SimpleDigraph {
        let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let named: Vec<(String, String)> = edges
            .iter()
            .map(|&(a, b)| (names[a].clone(), names[b].clone()))
            .collect();
        SimpleDigraph::from_edges(names, named.iter().map(|(a, b)| (a.as_str(), b.as_str())))
    }

    #[test]
    fn isolated_node_walks_are_singletons() {
        let g = digraph(1, &[]);
        let walks = sample_walks(&g, 4, 10, 1.0, 1.0, 3);
        assert_eq!(walks, vec![vec![0]; 4]);
    }

    #[test]
    fn chain_walk_is_forced() {
        let g = digraph(3, &[(0, 1), (1, 2)]);
        for seed in 0..20 {
            let walks = sample_walks(&g, 2, 3, 0.5, 2.0, seed);
            for w in walks.iter().filter(|w| w[0] == 0) {
                assert_eq!(w, &[0, 1, 2]);
            }
        }
    }

    #[test]
    fn walks_follow_edges_and_respect_length() {
        let g = digraph(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2), (1, 3)]);
        let walks = sample_walks(&g, 3, 7, 0.25, 4.0, 11);
        assert_eq!(walks.len(), 15);
        for w in &walks {
            assert!(w.len() <= 7);
            for pair in w.windows(2) {
                assert!(g.has_edge(pair[0], pair[1]));
            }
        }
    }

    #[test]
    fn weights_follow_bias_rule() {
        // 0 -> 1, 1 -> {0, 2, 3}, 0 -> 2
        let g = digraph(4, &[(0, 1), (1, 0), (1, 2), (1, 3), (0, 2)]);
        let w = transition_weights(&g, Some(0), 1, 0.5, 4.0);
        assert_eq!(w, vec![(0, 2.0), (2, 1.0), (3, 0.25)]);
    }

    #[test]
    fn deterministic_for_seed() {
        let g = digraph(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]);
        assert_eq!(
            sample_walks(&g, 2, 20, 2.0, 0.5, 9),
            sample_walks(&g, 2, 20, 2.0, 0.5, 9)
        );
        assert_ne!(
            sample_walks(&g, 2, 20, 2.0, 0.5, 9),
            sample_walks(&g, 2, 20, 2.0, 0.5, 10)
        );
    }
}
