use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Tree, TreeParams};
use super::LearnError;
use crate::dataset::FeatureTable;
use crate::seed::{self, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(F))`.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            min_samples_leaf: 1,
            max_depth: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn resolved_max_features(&self, width: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (width as f64).sqrt().ceil() as usize)
            .clamp(1, width.max(1))
    }

    pub fn validate(&self, width: usize) -> Result<(), LearnError> {
        if self.n_trees == 0 {
            return Err(LearnError::Config("n_trees must be at least 1".into()));
        }
        if let Some(m) = self.max_features {
            if m == 0 || m > width {
                return Err(LearnError::Config(format!("max_features must be in 1..={width}, got {m}")));
            }
        }
        if self.min_samples_leaf == 0 {
            return Err(LearnError::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format: String,
    pub feature_names: Vec<String>,
    pub config: ForestConfig,
    pub trees: Vec<Tree>,
}

const MODEL_FORMAT: &str = "forest v1";

impl ForestModel {
    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict_one(&self, row: &[f64]) -> Result<f64, LearnError> {
        if row.len() != self.width() {
            return Err(LearnError::WidthMismatch {
                expected: self.width(),
                found: row.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.predict_proba(row)).sum::<f64>() / self.trees.len() as f64)
    }

    /// Mean over trees of the leaf positive-class fraction.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, LearnError> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        let m: ForestModel = serde_json::from_str(text).map_err(LearnError::Json)?;
        if m.format != MODEL_FORMAT {
            return Err(LearnError::Config(format!("unsupported model format `{}`", m.format)));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), LearnError> {
        std::fs::write(path, self.to_json()).map_err(|e| LearnError::Io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self, LearnError> {
        let text = std::fs::read_to_string(path).map_err(|e| LearnError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}

/// Bootstrap multiplicities for tree `t`.
pub fn bootstrap_weights(n: usize, seed: u64, t: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed, &[stream::FOREST, t as u64]);
    let mut w = vec![0.0; n];
    for _ in 0..n {
        w[rng.gen_range(0..n)] += 1.0;
    }
    w
}

fn check_inputs(x: &[Vec<f64>], y: &[u8], names: &[String]) -> Result<(), LearnError> {
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(LearnError::TooFewRows(x.len()));
    }
    if let Some(bad) = x.iter().find(|r| r.len() != names.len()) {
        return Err(LearnError::WidthMismatch {
            expected: names.len(),
            found: bad.len(),
        });
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(LearnError::DegenerateLabels);
    }
    Ok(())
}

/// Trains a forest and also returns out-of-bag probabilities for the
/// training rows. A row that is in-bag for every tree gets the full-forest
/// probability instead.
pub fn fit_forest(
    x: &[Vec<f64>],
    y: &[u8],
    feature_names: Vec<String>,
    cfg: &ForestConfig,
) -> Result<(ForestModel, Vec<f64>), LearnError> {
    check_inputs(x, y, &feature_names)?;
    let width = feature_names.len();
    cfg.validate(width)?;
    let params = TreeParams {
        max_features: cfg.resolved_max_features(width),
        min_samples_leaf: cfg.min_samples_leaf,
        max_depth: cfg.max_depth,
    };
    let n = x.len();
    let grown: Vec<(Tree, Vec<f64>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let w = bootstrap_weights(n, cfg.seed, t);
            let mut rng = seed::rng(cfg.seed, &[stream::TREE, t as u64]);
            (grow_tree(x, y, &w, params, &mut rng), w)
        })
        .collect();
    let mut oob_sum = vec![0.0; n];
    let mut oob_count = vec![0usize; n];
    for (tree, w) in &grown {
        for i in 0..n {
            if w[i] == 0.0 {
                oob_sum[i] += tree.predict_proba(&x[i]);
                oob_count[i] += 1;
            }
        }
    }
    let model = ForestModel {
        format: MODEL_FORMAT.into(),
        feature_names,
        config: cfg.clone(),
        trees: grown.into_iter().map(|(t, _)| t).collect(),
    };
    let oob = (0..n)
        .map(|i| {
            if oob_count[i] > 0 {
                Ok(oob_sum[i] / oob_count[i] as f64)
            } else {
                model.predict_one(&x[i])
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((model, oob))
}

pub fn train_forest(table: &FeatureTable, cfg: &ForestConfig) -> Result<ForestModel, LearnError> {
    fit_forest(&table.features(), &table.labels(), table.feature_names.clone(), cfg).map(|(m, _)| m)
}
