//! Cross-version embedding alignment.
//!
//! Anchors are modules present in both versions. Their vectors form paired
//! column matrices `X` (new version) and `Y` (old version), and a `d x d`
//! transform `T` with `T X ~ Y` maps the new embedding into the old one's
//! space, where the classifier was trained.

mod anchors;
mod transform;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anchors::{
    gns_scores, knn_neighbors, knn_scores, score_gns_anchor, score_knn_anchor, select_anchors, select_random,
    select_top, AnchorCount, AnchorInputs, AnchorSet, AnchorStrategy,
};
pub use transform::{
    anchor_matrices, apply_transform, fit, fit_linear, fit_orthogonal, frobenius_residual, AlignmentTransform,
    Method,
};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("node `{0}` missing from {1}")]
    MissingNode(String, &'static str),
    #[error("k = {k} requires more than k nodes, embedding has {nodes}")]
    KTooLarge { k: usize, nodes: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no shared modules")]
    NoSharedModules,
    #[error("empty anchor matrices (d = {d}, n = {n})")]
    Empty { d: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular value decomposition failed")]
    Svd,
    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

macro_rules! string_enum {
    ($ty:ident, $kind:literal, { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = AlignError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(AlignError::Unknown { kind: $kind, value: other.to_string() }),
                }
            }
        }
    };
}

/// Anchor scoring strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Knn,
    Gns,
    Random,
}

string_enum!(StrategyKind, "anchor strategy", { Knn => "knn", Gns => "gns", Random => "random" });
string_enum!(Method, "alignment method", { Orthogonal => "orthogonal", Linear => "linear" });
