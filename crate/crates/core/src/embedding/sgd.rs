//! Negative-sampling SGD shared by skip-gram and LINE.
//!
//! Parameters live behind [`Params`] so the same update code runs on plain
//! cells (single worker, bit-reproducible) and on relaxed atomics (several
//! workers updating lock-free, no determinism guarantee).

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::seed::{self, stream};

pub trait Params {
    fn get(&self, i: usize) -> f64;
    fn set(&self, i: usize, v: f64);
}

impl Params for [Cell<f64>] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self[i].get()
    }

    #[inline]
    fn set(&self, i: usize, v: f64) {
        self[i].set(v)
    }
}

impl Params for [AtomicU64] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f64) {
        self[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

pub fn to_atomic(v: &[f64]) -> Vec<AtomicU64> {
    v.iter().map(|x| AtomicU64::new(x.to_bits())).collect()
}

pub fn from_atomic(v: &[AtomicU64]) -> Vec<f64> {
    v.iter().map(|x| f64::from_bits(x.load(Ordering::Relaxed))).collect()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Seeded uniform initialization in `[-0.5/dim, 0.5/dim]`. Each node draws
/// from its own stream, so a node's initial vector does not depend on which
/// other nodes are present.
pub fn initial_vectors(nodes: &[usize], dim: usize, seed: u64) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    let mut out = Vec::with_capacity(nodes.len() * dim);
    for &node in nodes {
        let mut rng = seed::rng(seed, &[stream::INIT, node as u64]);
        out.extend((0..dim).map(|_| rng.gen_range(-half..=half)));
    }
    out
}

/// Learning rate after `done` of `total` samples: linear decay with a floor
/// of `1e-4` of the initial rate.
#[inline]
pub fn learning_rate(initial: f64, done: usize, total: usize) -> f64 {
    let frac = if total == 0 { 0.0 } else { done as f64 / total as f64 };
    initial * (1.0 - frac).max(1e-4)
}

/// Noise distribution proportional to `weight^0.75`.
pub struct NoiseSampler {
    dist: Option<WeightedIndex<f64>>,
}

impl NoiseSampler {
    pub fn new(weights: &[f64]) -> Self {
        let powered: Vec<f64> = weights.iter().map(|w| w.powf(0.75)).collect();
        Self {
            dist: WeightedIndex::new(&powered).ok(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        self.dist.as_ref().map(|d| d.sample(rng))
    }
}

/// One positive pair plus `negatives` noise targets. `input` row `src` is
/// pushed towards output row `pos` and away from the noise rows.
#[allow(clippy::too_many_arguments)]
pub fn update_pair<P: Params + ?Sized, R: Rng + ?Sized>(
    input: &P,
    output: &P,
    dim: usize,
    src: usize,
    pos: usize,
    negatives: usize,
    noise: &NoiseSampler,
    lr: f64,
    grad: &mut [f64],
    rng: &mut R,
) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let s = src * dim;
    for d in 0..=negatives {
        let (target, label) = if d == 0 {
            (pos, 1.0)
        } else {
            match noise.sample(rng) {
                Some(t) if t != pos => (t, 0.0),
                _ => continue,
            }
        };
        let t = target * dim;
        let mut dot = 0.0;
        for k in 0..dim {
            dot += input.get(s + k) * output.get(t + k);
        }
        let g = (label - sigmoid(dot)) * lr;
        for (k, gk) in grad.iter_mut().enumerate() {
            let o = output.get(t + k);
            *gk += g * o;
            output.set(t + k, o + g * input.get(s + k));
        }
    }
    for (k, gk) in grad.iter().enumerate() {
        input.set(s + k, input.get(s + k) + gk);
    }
}
