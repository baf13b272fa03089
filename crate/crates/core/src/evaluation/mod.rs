//! Classification metrics, the signed-rank test, and report aggregation.

mod metrics;
mod report;
mod wilcoxon;

use thiserror::Error;

pub use metrics::{auc, average_ranks, f1, threshold_predictions, Confusion};
pub use report::{
    compare_to_baseline, mean, std_dev, summarize, Comparison, EvalReport, Failure, RunRecord, SummaryRow,
    SweepPoint,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_LIMIT, MIN_NONZERO};

/// Probability threshold for F1.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate comparison")]
    DegenerateComparison,
    #[error("need at least 5 nonzero differences, got {0}")]
    TooFewDifferences(usize),
    #[error("csv error in {0}: {1}")]
    Csv(String, #[source] csv::Error),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}
