use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Node of a binary classification tree. Rows with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        /// Bootstrap-weighted counts of class 0 and class 1.
        counts: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned decision tree; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_counts(&self, row: &[f64]) -> [f64; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Positive-class fraction of the leaf reached by `row`.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let [neg, pos] = self.leaf_counts(row);
        if neg + pos == 0.0 {
            0.0
        } else {
            pos / (neg + pos)
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_features: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

fn gini(c: [f64; 2]) -> f64 {
    let n = c[0] + c[1];
    if n == 0.0 {
        return 0.0;
    }
    let (a, b) = (c[0] / n, c[1] / n);
    1.0 - a * a - b * b
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Lowest weighted child impurity over thresholds of one feature, or `None`
/// when the feature is constant on `idx` or no threshold satisfies the leaf
/// size limit.
fn best_threshold(
    x: &[Vec<f64>],
    y: &[u8],
    w: &[f64],
    idx: &mut [usize],
    feature: usize,
    total: [f64; 2],
    min_leaf: f64,
) -> Option<(f64, f64)> {
    idx.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));
    let first = x[idx[0]][feature];
    let last = x[idx[idx.len() - 1]][feature];
    if first == last {
        return None;
    }
    let n = total[0] + total[1];
    let mut left = [0.0; 2];
    let mut best: Option<(f64, f64)> = None;
    for j in 0..idx.len() - 1 {
        let i = idx[j];
        left[y[i] as usize] += w[i];
        let v = x[i][feature];
        let next = x[idx[j + 1]][feature];
        if v == next {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let (nl, nr) = (left[0] + left[1], right[0] + right[1]);
        if nl < min_leaf || nr < min_leaf {
            continue;
        }
        let imp = (nl * gini(left) + nr * gini(right)) / n;
        if best.is_none_or(|(b, _)| imp < b) {
            let mut t = v + (next - v) / 2.0;
            if t >= next {
                t = v;
            }
            best = Some((imp, t));
        }
    }
    best
}

/// Grows a tree on the rows with positive weight. Weights are bootstrap
/// multiplicities. At each node features are visited in random order until
/// `max_features` non-constant ones have been evaluated.
pub fn grow_tree<R: Rng + ?Sized>(x: &[Vec<f64>], y: &[u8], w: &[f64], params: TreeParams, rng: &mut R) -> Tree {
    let width = x.first().map_or(0, Vec::len);
    let min_leaf = params.min_samples_leaf.max(1) as f64;
    let mut nodes = Vec::new();
    let root: Vec<usize> = (0..x.len()).filter(|&i| w[i] > 0.0).collect();
    nodes.push(Node::Leaf { counts: [0.0; 2] });
    let mut stack = vec![(0usize, root, 0usize)];
    let mut features: Vec<usize> = (0..width).collect();
    while let Some((slot, mut idx, depth)) = stack.pop() {
        let mut counts = [0.0; 2];
        for &i in &idx {
            counts[y[i] as usize] += w[i];
        }
        let pure = counts[0] == 0.0 || counts[1] == 0.0;
        let capped = params.max_depth.is_some_and(|d| depth >= d);
        if pure || capped || counts[0] + counts[1] < 2.0 * min_leaf {
            nodes[slot] = Node::Leaf { counts };
            continue;
        }
        features.shuffle(rng);
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        for &f in &features {
            if visited == params.max_features {
                break;
            }
            let first = x[idx[0]][f];
            if idx.iter().all(|&i| x[i][f] == first) {
                continue;
            }
            visited += 1;
            if let Some((imp, t)) = best_threshold(x, y, w, &mut idx, f, counts, min_leaf) {
                if best.as_ref().is_none_or(|b| imp < b.impurity) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: t,
                        impurity: imp,
                    });
                }
            }
        }
        let Some(split) = best else {
            nodes[slot] = Node::Leaf { counts };
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][split.feature] <= split.threshold);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { counts: [0.0; 2] });
        nodes.push(Node::Leaf { counts: [0.0; 2] });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: li,
            right: ri,
        };
        stack.push((ri, r, depth + 1));
        stack.push((li, l, depth + 1));
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn params(max_features: usize) -> TreeParams {
        TreeParams {
            max_features,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }

    #[test]
    fn separable_one_dimensional() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 - 49.5]).collect();
        let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] > 0.0)).collect();
        let t = grow_tree(&x, &y, &vec![1.0; 100], params(1), &mut seed::rng(0, &[]));
        assert_eq!(t.depth(), 1);
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(t.predict_proba(r), l as f64);
        }
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 0.0),
            n => panic!("root is {n:?}"),
        }
    }

    #[test]
    fn constant_features_give_prior() {
        let x = vec![vec![1.0, 2.0]; 10];
        let y: Vec<u8> = (0..10).map(|i| u8::from(i < 3)).collect();
        let t = grow_tree(&x, &y, &[1.0; 10], params(2), &mut seed::rng(0, &[]));
        assert_eq!(t.nodes.len(), 1);
        assert!((t.predict_proba(&[1.0, 2.0]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 1, 1, 0];
        let t = grow_tree(&x, &y, &[1.0; 4], params(2), &mut seed::rng(1, &[]));
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(t.predict_proba(r), l as f64);
        }
    }

    #[test]
    fn weights_count_as_multiplicity() {
        let x = vec![vec![0.0], vec![0.0], vec![5.0]];
        let y = vec![0, 1, 1];
        let t = grow_tree(&x, &y, &[3.0, 1.0, 0.0], params(1), &mut seed::rng(0, &[]));
        assert_eq!(t.leaf_counts(&[0.0]), [3.0, 1.0]);
    }

    #[test]
    fn depth_cap() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..16).map(|i| (i % 2) as u8).collect();
        let p = TreeParams {
            max_depth: Some(2),
            ..params(1)
        };
        assert!(grow_tree(&x, &y, &[1.0; 16], p, &mut seed::rng(0, &[])).depth() <= 2);
    }
}
