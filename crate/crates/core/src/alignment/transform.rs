use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{AlignError, AnchorSet};
use crate::embedding::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Orthogonal Procrustes: rotation/reflection only.
    Orthogonal,
    /// Unconstrained zero-intercept least squares.
    Linear,
}

/// `d x d` map from the new embedding space into the old one.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentTransform {
    pub matrix: DMatrix<f64>,
    pub method: Method,
    pub warnings: Vec<String>,
}

impl AlignmentTransform {
    pub fn identity(dim: usize, method: Method) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            method,
            warnings: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut out = format!("transform v1 {} {d}\n", self.method);
        for r in 0..d {
            let row: Vec<String> = (0..d).map(|c| self.matrix[(r, c)].to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, AlignError> {
        let perr = |line: usize, message: String| AlignError::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let (method, d) = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["transform", "v1", method, d] => (
                method.parse::<Method>()?,
                d.parse::<usize>().map_err(|_| perr(hl, format!("bad dimension `{d}`")))?,
            ),
            _ => return Err(perr(hl, format!("expected `transform v1 <method> <d>`, found `{header}`"))),
        };
        let mut values = Vec::with_capacity(d * d);
        let mut rows = 0;
        for (line, row) in lines {
            let parsed: Result<Vec<f64>, _> = row.split_whitespace().map(str::parse::<f64>).collect();
            let parsed = parsed.map_err(|e| perr(line, e.to_string()))?;
            if parsed.len() != d {
                return Err(perr(line, format!("expected {d} values, found {}", parsed.len())));
            }
            values.extend(parsed);
            rows += 1;
        }
        if rows != d {
            return Err(perr(hl, format!("expected {d} rows, found {rows}")));
        }
        Ok(Self {
            matrix: DMatrix::from_row_slice(d, d, &values),
            method,
            warnings: Vec::new(),
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Self, AlignError> {
        let text = std::fs::read_to_string(path).map_err(|e| AlignError::Io(path.display().to_string(), e))?;
        Self::from_text(&text)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), AlignError> {
        std::fs::write(path, self.to_text()).map_err(|e| AlignError::Io(path.display().to_string(), e))
    }
}

fn check_pair(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(), AlignError> {
    let (d, n) = x.shape();
    if d == 0 || n == 0 {
        return Err(AlignError::Empty { d, n });
    }
    if y.nrows() != d {
        return Err(AlignError::DimensionMismatch {
            expected: d,
            found: y.nrows(),
        });
    }
    if y.ncols() != n {
        return Err(AlignError::DimensionMismatch {
            expected: n,
            found: y.ncols(),
        });
    }
    Ok(())
}

/// Solves `min ||Y - T X||_F` over orthogonal `T`: with `U S V^T` the SVD
/// of `Y X^T`, `T = U V^T`. Columns of `x` come from the new embedding and
/// columns of `y` from the old one.
pub fn fit_orthogonal(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<AlignmentTransform, AlignError> {
    check_pair(x, y)?;
    let m = y * x.transpose();
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(AlignError::Svd),
    };
    Ok(AlignmentTransform {
        matrix: u * v_t,
        method: Method::Orthogonal,
        warnings: Vec::new(),
    })
}

/// Solves `min ||Y - T X||_F` over all `T`, i.e. one zero-intercept least
/// squares problem per output dimension. Uses the pseudoinverse, so a
/// rank-deficient `X` gives the minimum-norm solution.
pub fn fit_linear(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<AlignmentTransform, AlignError> {
    check_pair(x, y)?;
    let (d, n) = x.shape();
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * (d.max(n) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let pinv = svd.pseudo_inverse(tol).map_err(|_| AlignError::Svd)?;
    let mut warnings = Vec::new();
    if rank < d {
        let msg = format!("anchor matrix has rank {rank} < dimension {d}; using minimum-norm solution");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(AlignmentTransform {
        matrix: y * pinv,
        method: Method::Linear,
        warnings,
    })
}

pub fn fit(method: Method, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<AlignmentTransform, AlignError> {
    match method {
        Method::Orthogonal => fit_orthogonal(x, y),
        Method::Linear => fit_linear(x, y),
    }
}

pub fn frobenius_residual(t: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (y - t * x).norm()
}

/// Paired `d x n` matrices for the anchors: `X` from the new embedding,
/// `Y` from the old.
pub fn anchor_matrices(
    anchors: &AnchorSet,
    old: &EmbeddingMatrix,
    new: &EmbeddingMatrix,
) -> Result<(DMatrix<f64>, DMatrix<f64>), AlignError> {
    if old.dim() != new.dim() {
        return Err(AlignError::DimensionMismatch {
            expected: old.dim(),
            found: new.dim(),
        });
    }
    let d = old.dim();
    let n = anchors.len();
    let mut x = DMatrix::zeros(d, n);
    let mut y = DMatrix::zeros(d, n);
    for (col, name) in anchors.names().enumerate() {
        let xv = new
            .vector(name)
            .ok_or_else(|| AlignError::MissingNode(name.to_string(), "new embedding"))?;
        let yv = old
            .vector(name)
            .ok_or_else(|| AlignError::MissingNode(name.to_string(), "old embedding"))?;
        x.column_mut(col).copy_from_slice(xv);
        y.column_mut(col).copy_from_slice(yv);
    }
    Ok((x, y))
}

/// Replaces every vector `v` by `T v`.
pub fn apply_transform(t: &AlignmentTransform, emb: &EmbeddingMatrix) -> Result<EmbeddingMatrix, AlignError> {
    let d = emb.dim();
    if t.matrix.nrows() != d || t.matrix.ncols() != d {
        return Err(AlignError::DimensionMismatch {
            expected: t.matrix.nrows(),
            found: d,
        });
    }
    let mut data = Vec::with_capacity(emb.len() * d);
    for (_, v) in emb.rows() {
        for r in 0..d {
            let mut acc = 0.0;
            for (c, x) in v.iter().enumerate() {
                acc += t.matrix[(r, c)] * x;
            }
            data.push(acc);
        }
    }
    Ok(EmbeddingMatrix::new(emb.node_ids().to_vec(), d, data)
        .expect("transform of a valid matrix keeps its shape")
        .with_meta(emb.meta.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(d: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::seed::rng(seed, &[]);
        DMatrix::from_fn(d, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn one_dimensional_reflection() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let y = DMatrix::from_row_slice(1, 2, &[-1.0, -2.0]);
        let t = fit_orthogonal(&x, &y).unwrap();
        assert!((t.matrix[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_inputs_have_zero_residual() {
        let x = random(3, 7, 1);
        let t = fit_orthogonal(&x, &x).unwrap();
        assert!(frobenius_residual(&t.matrix, &x, &x) < 1e-12);
        let t = fit_linear(&x, &x).unwrap();
        assert!((t.matrix - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn linear_recovers_scaling() {
        let x = random(4, 20, 2);
        let y = &x * 2.0;
        let t = fit_linear(&x, &y).unwrap();
        assert!((t.matrix - DMatrix::identity(4, 4) * 2.0).amax() < 1e-10);
        assert!(t.warnings.is_empty());
    }

    #[test]
    fn linear_rank_deficiency_warns() {
        let x = DMatrix::from_fn(4, 2, |r, c| (r + c) as f64);
        let y = x.clone();
        let t = fit_linear(&x, &y).unwrap();
        assert_eq!(t.warnings.len(), 1);
        assert!(frobenius_residual(&t.matrix, &x, &y) < 1e-10);
    }

    #[test]
    fn empty_or_mismatched_inputs() {
        let x = DMatrix::<f64>::zeros(3, 0);
        assert!(matches!(fit_orthogonal(&x, &x), Err(AlignError::Empty { .. })));
        let a = DMatrix::<f64>::zeros(3, 4);
        let b = DMatrix::<f64>::zeros(2, 4);
        assert!(fit_linear(&a, &b).is_err());
    }

    #[test]
    fn transform_text_round_trip() {
        let t = AlignmentTransform {
            matrix: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 1e-17]),
            method: Method::Orthogonal,
            warnings: vec![],
        };
        let back = AlignmentTransform::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert!(AlignmentTransform::from_text("transform v1 linear 2\n1 0\n").is_err());
        assert!(AlignmentTransform::from_text("transform v1 affine 1\n1\n").is_err());
    }

    #[test]
    fn apply_checks_dimension() {
        let emb = EmbeddingMatrix::new(vec!["a".into()], 2, vec![1.0, 2.0]).unwrap();
        let t = AlignmentTransform::identity(3, Method::Linear);
        assert!(apply_transform(&t, &emb).is_err());
        let t = AlignmentTransform::identity(2, Method::Linear);
        assert_eq!(apply_transform(&t, &emb).unwrap(), emb);
    }
}
