//! Random-forest defect classifier and the logistic meta-model that combines
//! two classifiers' probabilities.

mod forest;
mod meta;
mod tree;

use thiserror::Error;

pub use forest::{bootstrap_weights, fit_forest, train_forest, ForestConfig, ForestModel};
pub use meta::{meta_gradient, meta_objective, predict_meta, train_meta, MetaModel, L2_PENALTY};
pub use tree::{grow_tree, Node, Tree, TreeParams};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("degenerate labels")]
    DegenerateLabels,
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("row width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Json(#[source] serde_json::Error),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}
