use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AlignError, StrategyKind};
use crate::embedding::EmbeddingMatrix;
use crate::graph::SimpleDigraph;
use crate::seed::{self, stream};

/// How many anchors to select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnchorCount {
    Count(usize),
    #[serde(with = "all_literal")]
    All,
}

mod all_literal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("all")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "all" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"all\", found \"{s}\"")))
        }
    }
}

impl AnchorCount {
    pub fn resolve(self, available: usize) -> usize {
        match self {
            AnchorCount::Count(n) => n.min(available),
            AnchorCount::All => available,
        }
    }
}

impl fmt::Display for AnchorCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnchorCount::Count(n) => write!(f, "{n}"),
            AnchorCount::All => f.write_str("all"),
        }
    }
}

impl FromStr for AnchorCount {
    type Err = AlignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(AnchorCount::All);
        }
        s.parse().map(AnchorCount::Count).map_err(|_| AlignError::Unknown {
            kind: "anchor count",
            value: s.to_string(),
        })
    }
}

/// Strategy with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorStrategy {
    Knn { k: usize },
    Gns,
    Random,
}

impl AnchorStrategy {
    pub fn kind(self) -> StrategyKind {
        match self {
            AnchorStrategy::Knn { .. } => StrategyKind::Knn,
            AnchorStrategy::Gns => StrategyKind::Gns,
            AnchorStrategy::Random => StrategyKind::Random,
        }
    }
}

/// Selected anchors, highest score first.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub pairs: Vec<(String, f64)>,
    pub strategy: StrategyKind,
    pub requested: AnchorCount,
    pub warnings: Vec<String>,
}

impl AnchorSet {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("anchors v1 {} {}\n", self.strategy, self.requested);
        for (name, score) in &self.pairs {
            out.push_str(&format!("{name} {score}\n"));
        }
        out
    }
}

/// The `k` nearest rows to row `idx` by Euclidean distance, excluding the
/// row itself. Distance ties are broken by node name.
pub fn knn_neighbors(emb: &EmbeddingMatrix, idx: usize, k: usize) -> Vec<usize> {
    let q = emb.row(idx);
    let mut dist: Vec<(f64, usize)> = (0..emb.len())
        .filter(|&j| j != idx)
        .map(|j| {
            let d: f64 = emb.row(j).iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, j)
        })
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.total_cmp(&b.0)
            .then_with(|| emb.node_ids()[a.1].cmp(&emb.node_ids()[b.1]))
    };
    if k < dist.len() {
        dist.select_nth_unstable_by(k, by_dist);
        dist.truncate(k);
    }
    dist.sort_by(by_dist);
    dist.into_iter().map(|(_, j)| j).collect()
}

fn check_k(emb: &EmbeddingMatrix, k: usize) -> Result<(), AlignError> {
    if k == 0 {
        return Err(AlignError::ZeroK);
    }
    if k >= emb.len() {
        return Err(AlignError::KTooLarge { k, nodes: emb.len() });
    }
    Ok(())
}

fn neighbor_names<'a>(emb: &'a EmbeddingMatrix, node: &str, k: usize, which: &'static str) -> Result<HashSet<&'a str>, AlignError> {
    let idx = emb
        .index_of(node)
        .ok_or_else(|| AlignError::MissingNode(node.to_string(), which))?;
    Ok(knn_neighbors(emb, idx, k)
        .into_iter()
        .map(|j| emb.node_ids()[j].as_str())
        .collect())
}

/// Fraction of the node's `k` nearest neighbors shared between the two
/// embeddings.
pub fn score_knn_anchor(old: &EmbeddingMatrix, new: &EmbeddingMatrix, node: &str, k: usize) -> Result<f64, AlignError> {
    check_k(old, k)?;
    check_k(new, k)?;
    let a = neighbor_names(old, node, k, "old embedding")?;
    let b = neighbor_names(new, node, k, "new embedding")?;
    Ok(a.intersection(&b).count() as f64 / k as f64)
}

pub fn knn_scores(
    old: &EmbeddingMatrix,
    new: &EmbeddingMatrix,
    candidates: &[String],
    k: usize,
) -> Result<Vec<(String, f64)>, AlignError> {
    check_k(old, k)?;
    check_k(new, k)?;
    candidates
        .par_iter()
        .map(|c| score_knn_anchor(old, new, c, k).map(|s| (c.clone(), s)))
        .collect()
}

/// `|M0 ∩ M1|^2 / |M0 ∪ M1|` over the node's in- and out-neighbors in each
/// graph; zero when both neighborhoods are empty.
pub fn score_gns_anchor(old: &SimpleDigraph, new: &SimpleDigraph, node: &str) -> Result<f64, AlignError> {
    let m0 = old
        .neighbor_set(node)
        .ok_or_else(|| AlignError::MissingNode(node.to_string(), "old graph"))?;
    let m1 = new
        .neighbor_set(node)
        .ok_or_else(|| AlignError::MissingNode(node.to_string(), "new graph"))?;
    let inter = m0.intersection(&m1).count() as f64;
    let union = m0.union(&m1).count() as f64;
    Ok(if union == 0.0 { 0.0 } else { inter * inter / union })
}

pub fn gns_scores(
    old: &SimpleDigraph,
    new: &SimpleDigraph,
    candidates: &[String],
) -> Result<Vec<(String, f64)>, AlignError> {
    candidates
        .iter()
        .map(|c| score_gns_anchor(old, new, c).map(|s| (c.clone(), s)))
        .collect()
}

/// Top `n` by score; ties go to the lexicographically smaller name.
pub fn select_top(mut scored: Vec<(String, f64)>, n: AnchorCount, strategy: StrategyKind) -> AnchorSet {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(n.resolve(scored.len()));
    AnchorSet {
        pairs: scored,
        strategy,
        requested: n,
        warnings: Vec::new(),
    }
}

/// Uniform sample without replacement. Selected anchors carry score 0 and
/// are listed in name order.
pub fn select_random(candidates: &[String], n: AnchorCount, seed: u64) -> AnchorSet {
    let mut rng = seed::rng(seed, &[stream::ANCHORS]);
    let take = n.resolve(candidates.len());
    let mut picked: Vec<String> = candidates.choose_multiple(&mut rng, take).cloned().collect();
    picked.sort();
    AnchorSet {
        pairs: picked.into_iter().map(|c| (c, 0.0)).collect(),
        strategy: StrategyKind::Random,
        requested: n,
        warnings: Vec::new(),
    }
}

/// Everything anchor selection may need.
#[derive(Debug, Clone, Copy)]
pub struct AnchorInputs<'a> {
    pub old_emb: &'a EmbeddingMatrix,
    pub new_emb: &'a EmbeddingMatrix,
    pub old_graph: &'a SimpleDigraph,
    pub new_graph: &'a SimpleDigraph,
}

impl AnchorInputs<'_> {
    /// Nodes embedded in both versions, sorted.
    pub fn candidates(&self) -> Vec<String> {
        let new: BTreeSet<&str> = self.new_emb.node_ids().iter().map(String::as_str).collect();
        let mut shared: Vec<String> = self
            .old_emb
            .node_ids()
            .iter()
            .filter(|n| new.contains(n.as_str()))
            .cloned()
            .collect();
        shared.sort();
        shared
    }
}

pub fn select_anchors(
    inputs: &AnchorInputs<'_>,
    strategy: AnchorStrategy,
    n: AnchorCount,
    seed: u64,
) -> Result<AnchorSet, AlignError> {
    let candidates = inputs.candidates();
    if candidates.is_empty() {
        return Err(AlignError::NoSharedModules);
    }
    let mut set = match strategy {
        AnchorStrategy::Knn { k } => select_top(
            knn_scores(inputs.old_emb, inputs.new_emb, &candidates, k)?,
            n,
            StrategyKind::Knn,
        ),
        AnchorStrategy::Gns => select_top(
            gns_scores(inputs.old_graph, inputs.new_graph, &candidates)?,
            n,
            StrategyKind::Gns,
        ),
        AnchorStrategy::Random => select_random(&candidates, n, seed),
    };
    let dim = inputs.old_emb.dim();
    if set.len() < dim {
        let msg = format!("{} anchors is fewer than the embedding dimension {dim}", set.len());
        log::warn!("{msg}");
        set.warnings.push(msg);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(rows: &[(&str, &[f64])]) -> EmbeddingMatrix {
        let dim = rows[0].1.len();
        EmbeddingMatrix::new(
            rows.iter().map(|(n, _)| n.to_string()).collect(),
            dim,
            rows.iter().flat_map(|(_, v)| v.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_embeddings_score_one() {
        let e = emb(&[("a", &[0.0, 0.0]), ("b", &[1.0, 0.0]), ("c", &[0.0, 2.0]), ("d", &[3.0, 3.0])]);
        for n in ["a", "b", "c", "d"] {
            assert_eq!(score_knn_anchor(&e, &e, n, 2).unwrap(), 1.0);
        }
    }

    #[test]
    fn planted_knn_overlap() {
        // q's three nearest are {a,b,c} in the old space, {b,c,d} in the new.
        let old = emb(&[
            ("q", &[0.0]),
            ("a", &[1.0]),
            ("b", &[2.0]),
            ("c", &[3.0]),
            ("d", &[10.0]),
        ]);
        let new = emb(&[
            ("q", &[0.0]),
            ("a", &[10.0]),
            ("b", &[1.0]),
            ("c", &[2.0]),
            ("d", &[3.0]),
        ]);
        assert!((score_knn_anchor(&old, &new, "q", 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_neighborhoods_score_zero() {
        let old = emb(&[("q", &[0.0]), ("a", &[1.0]), ("b", &[9.0]), ("c", &[10.0])]);
        let new = emb(&[("q", &[0.0]), ("a", &[9.0]), ("b", &[1.0]), ("c", &[10.0])]);
        assert_eq!(score_knn_anchor(&old, &new, "q", 1).unwrap(), 0.0);
    }

    #[test]
    fn knn_errors() {
        let e = emb(&[("a", &[0.0]), ("b", &[1.0])]);
        assert!(matches!(score_knn_anchor(&e, &e, "a", 2), Err(AlignError::KTooLarge { .. })));
        assert!(matches!(score_knn_anchor(&e, &e, "z", 1), Err(AlignError::MissingNode(..))));
        assert!(matches!(score_knn_anchor(&e, &e, "a", 0), Err(AlignError::ZeroK)));
    }

    fn star(center: &str, leaves: &[&str]) -> SimpleDigraph {
        let mut names: Vec<String> = leaves.iter().map(|s| s.to_string()).collect();
        names.push(center.to_string());
        for extra in ["a", "b", "c", "d", "e", "f", "g", "h"] {
            names.push(extra.to_string());
        }
        let edges: Vec<(&str, &str)> = leaves.iter().map(|l| (center, *l)).collect();
        SimpleDigraph::from_edges(names, edges)
    }

    #[test]
    fn gns_formula() {
        let g = star("x", &["a", "b", "c", "d"]);
        assert_eq!(score_gns_anchor(&g, &g, "x").unwrap(), 4.0);
        let g0 = star("x", &["a", "b", "c"]);
        let g1 = star("x", &["b", "c", "d"]);
        assert_eq!(score_gns_anchor(&g0, &g1, "x").unwrap(), 1.0);
        let g1 = star("x", &["e", "f"]);
        assert_eq!(score_gns_anchor(&g0, &g1, "x").unwrap(), 0.0);
        assert_eq!(score_gns_anchor(&g0, &g1, "h").unwrap(), 0.0);
        assert!(score_gns_anchor(&g0, &g1, "zz").is_err());
    }

    #[test]
    fn gns_counts_incoming_neighbors() {
        let names = vec!["x".to_string(), "a".to_string(), "b".to_string()];
        let g0 = SimpleDigraph::from_edges(names.clone(), [("a", "x"), ("x", "b")]);
        let g1 = SimpleDigraph::from_edges(names, [("x", "a"), ("b", "x")]);
        assert_eq!(score_gns_anchor(&g0, &g1, "x").unwrap(), 2.0);
    }

    #[test]
    fn top_selection_breaks_ties_by_name() {
        let scored = vec![("c".to_string(), 0.9), ("b".to_string(), 0.5), ("a".to_string(), 0.9)];
        let set = select_top(scored.clone(), AnchorCount::Count(2), StrategyKind::Knn);
        assert_eq!(set.names().collect::<Vec<_>>(), ["a", "c"]);
        let all = select_top(scored, AnchorCount::Count(10), StrategyKind::Knn);
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn random_selection_is_reproducible() {
        let cands: Vec<String> = (0..50).map(|i| format!("m{i}")).collect();
        let a = select_random(&cands, AnchorCount::Count(10), 4);
        assert_eq!(a, select_random(&cands, AnchorCount::Count(10), 4));
        assert_ne!(a, select_random(&cands, AnchorCount::Count(10), 5));
        assert_eq!(a.len(), 10);
        assert_eq!(select_random(&cands, AnchorCount::All, 1).len(), 50);
    }

    #[test]
    fn anchor_count_parsing() {
        assert_eq!("all".parse::<AnchorCount>().unwrap(), AnchorCount::All);
        assert_eq!("64".parse::<AnchorCount>().unwrap(), AnchorCount::Count(64));
        assert!("lots".parse::<AnchorCount>().is_err());
        let v: Vec<AnchorCount> = serde_json::from_str(r#"[32, "all"]"#).unwrap();
        assert_eq!(v, [AnchorCount::Count(32), AnchorCount::All]);
    }

    #[test]
    fn empty_candidate_set_is_an_error() {
        let old = emb(&[("a", &[0.0]), ("b", &[1.0])]);
        let new = emb(&[("c", &[0.0]), ("d", &[1.0])]);
        let g = SimpleDigraph::default();
        let inputs = AnchorInputs {
            old_emb: &old,
            new_emb: &new,
            old_graph: &g,
            new_graph: &g,
        };
        assert!(matches!(
            select_anchors(&inputs, AnchorStrategy::Random, AnchorCount::All, 0),
            Err(AlignError::NoSharedModules)
        ));
    }
}
