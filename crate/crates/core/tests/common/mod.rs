//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use cvdp::alignment::AnchorCount;
use cvdp::embedding::{Algorithm, EmbeddingMatrix};
use cvdp::graph::SimpleDigraph;
use cvdp::pipeline::{ExperimentConfig, PairConfig, VersionConfig};
use cvdp::synthetic::{version_pair, write_pair, PairSpec};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let qr = gaussian(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Largest absolute entry of `TᵀT − I`.
pub fn orthogonality_error(t: &DMatrix<f64>) -> f64 {
    let d = t.nrows();
    (t.transpose() * t - DMatrix::<f64>::identity(d, d)).amax()
}

/// Digraph over `n0..n{n-1}` from index pairs.
pub fn digraph(n: usize, edges: &[(usize, usize)]) -> SimpleDigraph {
    let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let named: Vec<(String, String)> = edges
        .iter()
        .map(|&(a, b)| (names[a].clone(), names[b].clone()))
        .collect();
    SimpleDigraph::from_edges(names, named.iter().map(|(a, b)| (a.as_str(), b.as_str())))
}

pub fn random_edges(n: usize, p: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                out.push((u, v));
            }
        }
    }
    out
}

/// Embedding with small integer coordinates so that distance ties occur.
pub fn lattice_embedding(names: &[String], dim: usize, rng: &mut impl Rng) -> EmbeddingMatrix {
    let data = (0..names.len() * dim).map(|_| rng.gen_range(-3..=3) as f64).collect();
    EmbeddingMatrix::new(names.to_vec(), dim, data).unwrap()
}

/// Sorts every other node by (squared distance, name) and keeps `k`.
pub fn brute_knn(emb: &EmbeddingMatrix, node: &str, k: usize) -> BTreeSet<String> {
    let q = emb.vector(node).unwrap();
    let mut all: Vec<(f64, &str)> = emb
        .rows()
        .filter(|(name, _)| *name != node)
        .map(|(name, v)| (v.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum(), name))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
    all.into_iter().take(k).map(|(_, n)| n.to_string()).collect()
}

pub fn brute_knn_score(old: &EmbeddingMatrix, new: &EmbeddingMatrix, node: &str, k: usize) -> f64 {
    let a = brute_knn(old, node, k);
    let b = brute_knn(new, node, k);
    a.intersection(&b).count() as f64 / k as f64
}

/// In- and out-neighbors of `node` read straight off an edge list.
pub fn brute_neighbors(edges: &[(usize, usize)], node: usize) -> BTreeSet<usize> {
    edges
        .iter()
        .filter_map(|&(u, v)| match (u == node, v == node) {
            (true, false) => Some(v),
            (false, true) => Some(u),
            _ => None,
        })
        .collect()
}

pub fn brute_gns_score(old: &[(usize, usize)], new: &[(usize, usize)], node: usize) -> f64 {
    let a = brute_neighbors(old, node);
    let b = brute_neighbors(new, node);
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    let inter = a.intersection(&b).count() as f64;
    inter * inter / union as f64
}

/// Positive/negative pairs ranked correctly, ties counting one half.
pub fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

/// Two-sided signed-rank p-value by enumerating all `2^n` sign patterns of
/// the given ranks.
pub fn brute_wilcoxon_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    let total: f64 = ranks.iter().sum();
    let mu = total / 2.0;
    let observed = (w_plus - mu).abs();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (w - mu).abs() >= observed {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

/// Writes `seeds` synthetic version pairs under `root` and returns a config
/// covering all scenarios with both embedding algorithms.
pub fn synthetic_experiment(root: &Path, seeds: u64, repetitions: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml("").unwrap();
    for seed in 0..seeds {
        let pair = version_pair(&PairSpec::default(), seed);
        let paths = write_pair(&pair, &root.join(format!("pair{seed}"))).unwrap();
        cfg.pairs.push(PairConfig {
            name: format!("synth{seed}"),
            old: VersionConfig {
                src: Some(paths.old_src),
                graph: None,
                metrics: paths.old_metrics,
            },
            new: VersionConfig {
                src: Some(paths.new_src),
                graph: None,
                metrics: paths.new_metrics,
            },
        });
    }
    cfg.embedding.dim = 16;
    cfg.embedding.algorithms = vec![Algorithm::Node2vec, Algorithm::Line2];
    cfg.alignment.anchors = vec![AnchorCount::Count(32), AnchorCount::All];
    cfg.evaluation.repetitions = repetitions;
    cfg
}
