use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::EmbedError;

/// Provenance recorded in the embedding file header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingMeta {
    pub algorithm: String,
    pub seed: u64,
}

impl Default for EmbeddingMeta {
    fn default() -> Self {
        Self {
            algorithm: "none".to_string(),
            seed: 0,
        }
    }
}

/// Row-major `|nodes| x dim` matrix of node vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    node_ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    index: HashMap<String, usize>,
    pub meta: EmbeddingMeta,
}

impl EmbeddingMatrix {
    pub fn new(node_ids: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::Config("dimension must be at least 1".into()));
        }
        if data.len() != node_ids.len() * dim {
            return Err(EmbedError::Shape {
                expected: node_ids.len() * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(node_ids[pos / dim].clone()));
        }
        let mut index = HashMap::with_capacity(node_ids.len());
        for (i, id) in node_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(EmbedError::DuplicateNode(id.clone()));
            }
        }
        Ok(Self {
            node_ids,
            dim,
            data,
            index,
            meta: EmbeddingMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: EmbeddingMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.node_ids
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(n, v)| (n.as_str(), v))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Keeps only the rows whose name satisfies `keep`.
    pub fn retain(&self, mut keep: impl FnMut(&str) -> bool) -> EmbeddingMatrix {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (name, v) in self.rows() {
            if keep(name) {
                ids.push(name.to_string());
                data.extend_from_slice(v);
            }
        }
        EmbeddingMatrix::new(ids, self.dim, data)
            .expect("subset of a valid matrix is valid")
            .with_meta(self.meta.clone())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("emb v1 {} {} {}\n", self.dim, self.meta.algorithm, self.meta.seed);
        for (name, v) in self.rows() {
            out.push_str(name);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EmbedError> {
        let perr = |line: usize, message: String| EmbedError::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (dim, algorithm, seed) = match fields.as_slice() {
            ["emb", "v1", dim, algo, seed] => (
                dim.parse::<usize>()
                    .map_err(|_| perr(hline, format!("bad dimension `{dim}`")))?,
                algo.to_string(),
                seed.parse::<u64>()
                    .map_err(|_| perr(hline, format!("bad seed `{seed}`")))?,
            ),
            _ => return Err(perr(hline, format!("expected `emb v1 <dim> <algorithm> <seed>`, found `{header}`"))),
        };
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (line, row) in lines {
            let mut parts = row.split_whitespace();
            let name = parts.next().unwrap_or_default();
            let before = data.len();
            for tok in parts {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| perr(line, format!("bad number `{tok}`")))?;
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(perr(
                    line,
                    format!("expected {dim} values for `{name}`, found {}", data.len() - before),
                ));
            }
            ids.push(name.to_string());
        }
        Ok(EmbeddingMatrix::new(ids, dim, data)?.with_meta(EmbeddingMeta { algorithm, seed }))
    }

    pub fn read(path: &Path) -> Result<Self, EmbedError> {
        let text = std::fs::read_to_string(path).map_err(|e| EmbedError::Io(path.display().to_string(), e))?;
        Self::from_text(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), EmbedError> {
        std::fs::write(path, self.to_text()).map_err(|e| EmbedError::Io(path.display().to_string(), e))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
