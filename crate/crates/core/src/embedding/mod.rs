//! Node embeddings of the stripped CDN: node2vec (biased walks + skip-gram
//! with negative sampling) and LINE with second-order proximity.

mod matrix;
pub(crate) mod sgd;
mod walks;

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SimpleDigraph;
use crate::seed::{self, stream};

pub use matrix::{cosine, EmbeddingMatrix, EmbeddingMeta};
pub use sgd::{initial_vectors, sigmoid};
pub use walks::{next_step, sample_walks, transition_weights, walk_from};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid embedding configuration: {0}")]
    Config(String),
    #[error("unknown embedding algorithm `{0}` (expected node2vec or line2)")]
    UnknownAlgorithm(String),
    #[error("empty edge set")]
    EmptyEdgeSet,
    #[error("no walks to train on")]
    NoWalks,
    #[error("expected {expected} values, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("non-finite value in vector of `{0}`")]
    NonFinite(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Node2vec,
    Line2,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Node2vec => "node2vec",
            Algorithm::Line2 => "line2",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node2vec" => Ok(Algorithm::Node2vec),
            "line2" | "line" => Ok(Algorithm::Line2),
            other => Err(EmbedError::UnknownAlgorithm(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Node2vecParams {
    pub p: f64,
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for Node2vecParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            negatives: 5,
            epochs: 1,
            learning_rate: 0.025,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineParams {
    pub negatives: usize,
    /// Number of sampled edges; `None` means `100 * |E|`.
    pub sample_count: Option<usize>,
    pub learning_rate: f64,
}

impl Default for LineParams {
    fn default() -> Self {
        Self {
            negatives: 5,
            sample_count: None,
            learning_rate: 0.025,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub algorithm: Algorithm,
    pub dim: usize,
    pub node2vec: Node2vecParams,
    pub line2: LineParams,
    pub seed: u64,
    /// Training threads. `1` is bit-reproducible; more workers update
    /// shared parameters lock-free.
    pub workers: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Node2vec,
            dim: 32,
            node2vec: Node2vecParams::default(),
            line2: LineParams::default(),
            seed: 0,
            workers: 1,
        }
    }
}

impl EmbedConfig {
    pub fn new(algorithm: Algorithm, dim: usize, seed: u64) -> Self {
        Self {
            algorithm,
            dim,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        let n = &self.node2vec;
        let problems = [
            (self.dim == 0, "dim must be >= 1"),
            (self.workers == 0, "workers must be >= 1"),
            (!(n.p > 0.0 && n.p.is_finite()), "p must be > 0"),
            (!(n.q > 0.0 && n.q.is_finite()), "q must be > 0"),
            (n.walks_per_node == 0, "walks_per_node must be >= 1"),
            (n.walk_length == 0, "walk_length must be >= 1"),
            (n.window == 0, "window must be >= 1"),
            (n.epochs == 0, "epochs must be >= 1"),
            (!(n.learning_rate > 0.0 && n.learning_rate.is_finite()), "node2vec learning_rate must be > 0"),
            (!(self.line2.learning_rate > 0.0 && self.line2.learning_rate.is_finite()), "line2 learning_rate must be > 0"),
        ];
        match problems.iter().find(|(bad, _)| *bad) {
            Some((_, msg)) => Err(EmbedError::Config(msg.to_string())),
            None => Ok(()),
        }
    }
}

/// Skip-gram with negative sampling over node walks.
///
/// `walks` hold indices into `names`. The output contains every node that
/// occurs in some walk, in index order. Context pairs are all positions
/// within `window` of the center.
pub fn train_skipgram(
    walks: &[Vec<usize>],
    names: &[String],
    dim: usize,
    params: &Node2vecParams,
    seed: u64,
    workers: usize,
) -> Result<EmbeddingMatrix, EmbedError> {
    if walks.iter().all(Vec::is_empty) {
        return Err(EmbedError::NoWalks);
    }
    let n = names.len();
    let mut counts = vec![0.0f64; n];
    for w in walks {
        for &v in w {
            counts[v] += 1.0;
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let mut input = sgd::initial_vectors(&all, dim, seed);
    let mut output = vec![0.0; n * dim];
    let noise = sgd::NoiseSampler::new(&counts);
    let tokens: usize = walks.iter().map(Vec::len).sum();
    let total = tokens * params.epochs;

    if workers <= 1 {
        let inp = Cell::from_mut(&mut input[..]).as_slice_of_cells();
        let out = Cell::from_mut(&mut output[..]).as_slice_of_cells();
        let mut rng = seed::rng(seed, &[stream::SKIPGRAM, 0]);
        let mut done = 0;
        for _ in 0..params.epochs {
            skipgram_pass(walks, inp, out, dim, params, &noise, &mut done, total, &mut rng);
        }
    } else {
        let inp = sgd::to_atomic(&input);
        let out = sgd::to_atomic(&output);
        let progress = AtomicUsize::new(0);
        let chunk = walks.len().div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, part) in walks.chunks(chunk.max(1)).enumerate() {
                let (inp, out, noise, progress) = (&inp[..], &out[..], &noise, &progress);
                scope.spawn(move || {
                    let mut rng = seed::rng(seed, &[stream::SKIPGRAM, w as u64 + 1]);
                    for _ in 0..params.epochs {
                        for walk in part {
                            let mut done = progress.load(Ordering::Relaxed);
                            skipgram_pass(
                                std::slice::from_ref(walk),
                                inp,
                                out,
                                dim,
                                params,
                                noise,
                                &mut done,
                                total,
                                &mut rng,
                            );
                            progress.fetch_add(walk.len(), Ordering::Relaxed);
                        }
                    }
                });
            }
        });
        input = sgd::from_atomic(&inp);
    }

    let present: Vec<usize> = (0..n).filter(|&v| counts[v] > 0.0).collect();
    let ids = present.iter().map(|&v| names[v].clone()).collect();
    let data = present
        .iter()
        .flat_map(|&v| input[v * dim..(v + 1) * dim].iter().copied())
        .collect();
    EmbeddingMatrix::new(ids, dim, data)
}

#[allow(clippy::too_many_arguments)]
fn skipgram_pass<P: sgd::Params + ?Sized, R: Rng + ?Sized>(
    walks: &[Vec<usize>],
    input: &P,
    output: &P,
    dim: usize,
    params: &Node2vecParams,
    noise: &sgd::NoiseSampler,
    done: &mut usize,
    total: usize,
    rng: &mut R,
) {
    let mut grad = vec![0.0; dim];
    for walk in walks {
        for (i, &center) in walk.iter().enumerate() {
            let lr = sgd::learning_rate(params.learning_rate, *done, total);
            let lo = i.saturating_sub(params.window);
            let hi = (i + params.window).min(walk.len() - 1);
            for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    sgd::update_pair(
                        input,
                        output,
                        dim,
                        center,
                        context,
                        params.negatives,
                        noise,
                        lr,
                        &mut grad,
                        rng,
                    );
                }
            }
            *done += 1;
        }
    }
}

/// LINE with second-order proximity.
///
/// Each node has a vertex vector and a context vector. Every sample draws
/// an edge `u -> v` uniformly and pushes `u`'s vertex vector towards `v`'s
/// context vector, and away from `negatives` noise contexts drawn
/// proportionally to `degree^0.75`. The result holds the vertex vectors of
/// nodes with at least one incident edge.
pub fn train_line2(
    g: &SimpleDigraph,
    dim: usize,
    params: &LineParams,
    seed: u64,
    workers: usize,
) -> Result<EmbeddingMatrix, EmbedError> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    if edges.is_empty() {
        return Err(EmbedError::EmptyEdgeSet);
    }
    let n = g.node_count();
    let all: Vec<usize> = (0..n).collect();
    let mut vertex = sgd::initial_vectors(&all, dim, seed);
    let mut context = vec![0.0; n * dim];
    let degrees: Vec<f64> = (0..n).map(|v| g.degree(v) as f64).collect();
    let noise = sgd::NoiseSampler::new(&degrees);
    let total = params.sample_count.unwrap_or(100 * edges.len());

    let job = LineJob {
        edges: &edges,
        dim,
        params,
        noise: &noise,
        total,
        seed,
    };
    let progress = AtomicUsize::new(0);
    if workers <= 1 {
        let vert = Cell::from_mut(&mut vertex[..]).as_slice_of_cells();
        let ctx = Cell::from_mut(&mut context[..]).as_slice_of_cells();
        job.run(vert, ctx, total, 0, &progress);
    } else {
        let vert = sgd::to_atomic(&vertex);
        let ctx = sgd::to_atomic(&context);
        let per = total.div_ceil(workers);
        std::thread::scope(|scope| {
            for w in 0..workers {
                let count = per.min(total.saturating_sub(w * per));
                let (vert, ctx, progress, job) = (&vert[..], &ctx[..], &progress, &job);
                scope.spawn(move || job.run(vert, ctx, count, w as u64 + 1, progress));
            }
        });
        vertex = sgd::from_atomic(&vert);
    }

    let present: Vec<usize> = (0..n).filter(|&v| g.degree(v) > 0).collect();
    let ids = present.iter().map(|&v| g.name(v).to_string()).collect();
    let data = present
        .iter()
        .flat_map(|&v| vertex[v * dim..(v + 1) * dim].iter().copied())
        .collect();
    EmbeddingMatrix::new(ids, dim, data)
}

struct LineJob<'a> {
    edges: &'a [(usize, usize)],
    dim: usize,
    params: &'a LineParams,
    noise: &'a sgd::NoiseSampler,
    total: usize,
    seed: u64,
}

impl LineJob<'_> {
    fn run<P: sgd::Params + ?Sized>(&self, vert: &P, ctx: &P, count: usize, stream_id: u64, progress: &AtomicUsize) {
        let mut rng = seed::rng(self.seed, &[stream::LINE, stream_id]);
        let mut grad = vec![0.0; self.dim];
        for _ in 0..count {
            let done = progress.fetch_add(1, Ordering::Relaxed);
            let lr = sgd::learning_rate(self.params.learning_rate, done, self.total);
            let (u, v) = self.edges[rng.gen_range(0..self.edges.len())];
            sgd::update_pair(vert, ctx, self.dim, u, v, self.params.negatives, self.noise, lr, &mut grad, &mut rng);
        }
    }
}

/// Embeds the graph with the configured algorithm. Nodes without incident
/// edges get no vector.
pub fn embed(g: &SimpleDigraph, cfg: &EmbedConfig) -> Result<EmbeddingMatrix, EmbedError> {
    cfg.validate()?;
    let emb = match cfg.algorithm {
        Algorithm::Node2vec => {
            let p = &cfg.node2vec;
            if g.edge_count() == 0 {
                return Err(EmbedError::EmptyEdgeSet);
            }
            let walks = sample_walks(g, p.walks_per_node, p.walk_length, p.p, p.q, cfg.seed);
            train_skipgram(&walks, g.names(), cfg.dim, p, cfg.seed, cfg.workers)?
                .retain(|name| g.index_of(name).is_some_and(|i| g.degree(i) > 0))
        }
        Algorithm::Line2 => train_line2(g, cfg.dim, &cfg.line2, cfg.seed, cfg.workers)?,
    };
    Ok(emb.with_meta(EmbeddingMeta {
        algorithm: cfg.algorithm.to_string(),
        seed: cfg.seed,
    }))
}

/// Parses an algorithm name and embeds; convenience for string-driven
/// callers such as the CLI.
pub fn embed_named(g: &SimpleDigraph, algorithm: &str, mut cfg: EmbedConfig) -> Result<EmbeddingMatrix, EmbedError> {
    cfg.algorithm = algorithm.parse()?;
    embed(g, &cfg)
}
