use statrs::distribution::{ContinuousCDF, Normal};

use super::metrics::average_ranks;
use super::EvalError;

/// Largest sample size that uses the exact null distribution.
pub const EXACT_LIMIT: usize = 25;
pub const MIN_NONZERO: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    pub n: usize,
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided signed-rank test on paired samples. Zero differences are
/// dropped and tied magnitudes get average ranks.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Err(EvalError::DegenerateComparison);
    }
    if n < MIN_NONZERO {
        return Err(EvalError::TooFewDifferences(n));
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);
    let (p_value, exact) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w_plus), true)
    } else {
        (normal_p(&ranks, w_plus), false)
    };
    Ok(WilcoxonResult {
        statistic,
        w_plus,
        n,
        p_value,
        exact,
    })
}

/// `P(|T - mu| >= |t - mu|)` where `T` is the sum of a uniformly random
/// subset of `ranks`. Ranks are multiples of 1/2, so the distribution is
/// counted over doubled ranks.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let t = (w_plus * 2.0).round() as i64;
    let mu2 = max as i64; // twice the doubled mean, to stay integral
    let dev = (2 * t - mu2).abs();
    let total = 2f64.powi(ranks.len() as i32);
    let tail: f64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - mu2).abs() >= dev)
        .map(|(_, c)| c)
        .sum();
    (tail / total).min(1.0)
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}
