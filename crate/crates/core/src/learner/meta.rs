use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::embedding::sgd::sigmoid;

pub const L2_PENALTY: f64 = 1e-6;
const TOLERANCE: f64 = 1e-8;
const MAX_ITERATIONS: usize = 1000;

/// Logistic regression over two probability inputs:
/// `sigmoid(w0 + w1 * p_a + w2 * p_b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub weights: [f64; 3],
    pub iterations: usize,
    pub converged: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl MetaModel {
    pub fn new(weights: [f64; 3]) -> Self {
        Self {
            weights,
            iterations: 0,
            converged: true,
            warnings: Vec::new(),
        }
    }
}

fn check_lengths(p_a: &[f64], p_b: &[f64], n: usize) -> Result<(), LearnError> {
    if p_a.len() != n || p_b.len() != n {
        return Err(LearnError::LengthMismatch(p_a.len().max(p_b.len()), n));
    }
    Ok(())
}

/// Penalized log-likelihood. The intercept is not penalized.
pub fn meta_objective(w: &[f64; 3], p_a: &[f64], p_b: &[f64], labels: &[u8]) -> f64 {
    let mut ll = 0.0;
    for i in 0..labels.len() {
        let z = w[0] + w[1] * p_a[i] + w[2] * p_b[i];
        // log sigmoid(z) and log(1 - sigmoid(z)) without overflow
        let log1pexp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        ll += if labels[i] == 1 { z - log1pexp } else { -log1pexp };
    }
    ll - 0.5 * L2_PENALTY * (w[1] * w[1] + w[2] * w[2])
}

pub fn meta_gradient(w: &[f64; 3], p_a: &[f64], p_b: &[f64], labels: &[u8]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for i in 0..labels.len() {
        let r = labels[i] as f64 - sigmoid(w[0] + w[1] * p_a[i] + w[2] * p_b[i]);
        g[0] += r;
        g[1] += r * p_a[i];
        g[2] += r * p_b[i];
    }
    g[1] -= L2_PENALTY * w[1];
    g[2] -= L2_PENALTY * w[2];
    g
}

/// Maximum-likelihood fit by Newton's method with step halving.
pub fn train_meta(p_a: &[f64], p_b: &[f64], labels: &[u8]) -> Result<MetaModel, LearnError> {
    check_lengths(p_a, p_b, labels.len())?;
    if labels.is_empty() || labels.iter().all(|&l| l == labels[0]) {
        return Err(LearnError::DegenerateLabels);
    }
    let mut w = [0.0; 3];
    let mut obj = meta_objective(&w, p_a, p_b, labels);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let g = meta_gradient(&w, p_a, p_b, labels);
        let mut h = Matrix3::<f64>::zeros();
        for i in 0..labels.len() {
            let x = Vector3::new(1.0, p_a[i], p_b[i]);
            let s = sigmoid(w[0] + w[1] * p_a[i] + w[2] * p_b[i]);
            h += x * x.transpose() * (s * (1.0 - s));
        }
        h[(1, 1)] += L2_PENALTY;
        h[(2, 2)] += L2_PENALTY;
        let gv = Vector3::from(g);
        let step = match h.cholesky() {
            Some(c) => c.solve(&gv),
            None => gv,
        };
        let mut scale = 1.0;
        let mut next = w;
        let mut next_obj = obj;
        for _ in 0..60 {
            next = [w[0] + scale * step[0], w[1] + scale * step[1], w[2] + scale * step[2]];
            next_obj = meta_objective(&next, p_a, p_b, labels);
            if next_obj >= obj {
                break;
            }
            scale *= 0.5;
        }
        if next_obj < obj {
            converged = true;
            break;
        }
        let delta = ((next[0] - w[0]).powi(2) + (next[1] - w[1]).powi(2) + (next[2] - w[2]).powi(2)).sqrt();
        w = next;
        obj = next_obj;
        if delta < TOLERANCE {
            converged = true;
            break;
        }
    }
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!("meta-model did not converge in {MAX_ITERATIONS} iterations"));
    }
    let scores: Vec<f64> = (0..labels.len()).map(|i| w[0] + w[1] * p_a[i] + w[2] * p_b[i]).collect();
    let min_pos = (0..labels.len()).filter(|&i| labels[i] == 1).map(|i| scores[i]).fold(f64::INFINITY, f64::min);
    let max_neg = (0..labels.len()).filter(|&i| labels[i] == 0).map(|i| scores[i]).fold(f64::NEG_INFINITY, f64::max);
    if min_pos > max_neg {
        warnings.push("training data is perfectly separated; weights are held finite only by the penalty".into());
    }
    for msg in &warnings {
        log::warn!("{msg}");
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::Config("meta-model weights diverged".into()));
    }
    Ok(MetaModel {
        weights: w,
        iterations,
        converged,
        warnings,
    })
}

pub fn predict_meta(m: &MetaModel, p_a: &[f64], p_b: &[f64]) -> Result<Vec<f64>, LearnError> {
    check_lengths(p_a, p_b, p_a.len())?;
    let w = m.weights;
    Ok(p_a
        .iter()
        .zip(p_b)
        .map(|(a, b)| sigmoid(w[0] + w[1] * a + w[2] * b))
        .collect())
}
