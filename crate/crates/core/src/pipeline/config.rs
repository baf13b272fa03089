use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::alignment::{AnchorCount, Method, StrategyKind};
use crate::embedding::{Algorithm, EmbedConfig, LineParams, Node2vecParams};
use crate::learner::ForestConfig;

/// One released version: a source tree or a prebuilt graph file, plus its
/// metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VersionConfig {
    #[serde(default)]
    pub src: Option<PathBuf>,
    #[serde(default)]
    pub graph: Option<PathBuf>,
    pub metrics: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub name: String,
    pub old: VersionConfig,
    pub new: VersionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    /// Algorithms used by the single-embedding scenarios. The meta scenario
    /// always uses both.
    pub algorithms: Vec<Algorithm>,
    pub dim: usize,
    pub seed: u64,
    pub node2vec: Node2vecParams,
    pub line2: LineParams,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Node2vec],
            dim: 32,
            seed: 0,
            node2vec: Node2vecParams::default(),
            line2: LineParams::default(),
        }
    }
}

impl EmbeddingSection {
    pub fn embed_config(&self, algorithm: Algorithm, workers: usize) -> EmbedConfig {
        EmbedConfig {
            algorithm,
            dim: self.dim,
            node2vec: self.node2vec.clone(),
            line2: self.line2.clone(),
            seed: self.seed,
            workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentSection {
    /// Anchor counts to sweep; empty means `d, 2d, 4d, all`.
    pub anchors: Vec<AnchorCount>,
    pub k: usize,
    pub methods: Vec<Method>,
    /// Anchor strategy of the meta scenario.
    pub meta_strategy: StrategyKind,
}

impl Default for AlignmentSection {
    fn default() -> Self {
        Self {
            anchors: Vec::new(),
            k: 10,
            methods: vec![Method::Orthogonal],
            meta_strategy: StrategyKind::Knn,
        }
    }
}

impl AlignmentSection {
    pub fn anchor_sweep(&self, dim: usize) -> Vec<AnchorCount> {
        if self.anchors.is_empty() {
            vec![
                AnchorCount::Count(dim),
                AnchorCount::Count(2 * dim),
                AnchorCount::Count(4 * dim),
                AnchorCount::All,
            ]
        } else {
            self.anchors.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub repetitions: usize,
    pub base_seed: u64,
    pub threshold: f64,
    pub baseline: String,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            repetitions: 30,
            base_seed: 0,
            threshold: 0.5,
            baseline: "static_only".into(),
        }
    }
}

fn default_scenarios() -> Vec<String> {
    SCENARIO_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub workspace: Option<PathBuf>,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<String>,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub alignment: AlignmentSection,
    #[serde(default)]
    pub learner: ForestConfig,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(path.display().to_string(), e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(w) = self.workspace.as_mut() {
            fix(w);
        }
        for pair in &mut self.pairs {
            for v in [&mut pair.old, &mut pair.new] {
                v.src.as_mut().map(fix);
                v.graph.as_mut().map(fix);
                fix(&mut v.metrics);
            }
        }
    }
}

pub const SCENARIO_NAMES: [&str; 6] = [
    "static_only",
    "emb_no_align",
    "emb_random_anchor",
    "emb_knn_anchor",
    "emb_gns_anchor",
    "meta",
];

/// A fully parameterized experiment cell, minus pair and repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    StaticOnly,
    NoAlign {
        algorithm: Algorithm,
    },
    Anchored {
        strategy: StrategyKind,
        algorithm: Algorithm,
        anchors: AnchorCount,
        method: Method,
    },
    Meta {
        strategy: StrategyKind,
        anchors: AnchorCount,
        method: Method,
    },
}

impl Scenario {
    pub fn base_name(&self) -> &'static str {
        match self {
            Scenario::StaticOnly => "static_only",
            Scenario::NoAlign { .. } => "emb_no_align",
            Scenario::Anchored { strategy, .. } => match strategy {
                StrategyKind::Random => "emb_random_anchor",
                StrategyKind::Knn => "emb_knn_anchor",
                StrategyKind::Gns => "emb_gns_anchor",
            },
            Scenario::Meta { .. } => "meta",
        }
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        match self {
            Scenario::StaticOnly => vec![],
            Scenario::NoAlign { algorithm } | Scenario::Anchored { algorithm, .. } => vec![*algorithm],
            Scenario::Meta { .. } => vec![Algorithm::Node2vec, Algorithm::Line2],
        }
    }

    pub fn needs_graph(&self) -> bool {
        !matches!(self, Scenario::StaticOnly)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::StaticOnly => f.write_str("static_only"),
            Scenario::NoAlign { algorithm } => write!(f, "emb_no_align:{algorithm}"),
            Scenario::Anchored {
                algorithm,
                anchors,
                method,
                ..
            } => write!(f, "{}:{algorithm}:n={anchors}:{method}", self.base_name()),
            Scenario::Meta {
                strategy,
                anchors,
                method,
            } => write!(f, "meta:{strategy}:n={anchors}:{method}"),
        }
    }
}

/// Expands scenario names over algorithms, anchor counts and methods.
pub fn expand_scenarios(cfg: &ExperimentConfig) -> Result<Vec<Scenario>, PipelineError> {
    let sweep = cfg.alignment.anchor_sweep(cfg.embedding.dim);
    let mut out = BTreeSet::new();
    for name in &cfg.scenarios {
        let strategy = match name.as_str() {
            "static_only" => {
                out.insert(Scenario::StaticOnly);
                continue;
            }
            "emb_no_align" => {
                for &algorithm in &cfg.embedding.algorithms {
                    out.insert(Scenario::NoAlign { algorithm });
                }
                continue;
            }
            "meta" => {
                for &anchors in &sweep {
                    for &method in &cfg.alignment.methods {
                        out.insert(Scenario::Meta {
                            strategy: cfg.alignment.meta_strategy,
                            anchors,
                            method,
                        });
                    }
                }
                continue;
            }
            "emb_random_anchor" => StrategyKind::Random,
            "emb_knn_anchor" => StrategyKind::Knn,
            "emb_gns_anchor" => StrategyKind::Gns,
            other => return Err(PipelineError::Config(format!("unknown scenario `{other}`"))),
        };
        for &algorithm in &cfg.embedding.algorithms {
            for &anchors in &sweep {
                for &method in &cfg.alignment.methods {
                    out.insert(Scenario::Anchored {
                        strategy,
                        algorithm,
                        anchors,
                        method,
                    });
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Fatal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigDiagnostic {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for ConfigDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Fatal => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Every problem with the config, fatal or not.
pub fn validate(cfg: &ExperimentConfig) -> Vec<ConfigDiagnostic> {
    let mut out = Vec::new();
    let mut fatal = |m: String| {
        out.push(ConfigDiagnostic {
            severity: Severity::Fatal,
            message: m,
        })
    };
    if cfg.pairs.is_empty() {
        fatal("no version pairs configured".into());
    }
    let mut names = BTreeSet::new();
    for pair in &cfg.pairs {
        if !names.insert(pair.name.as_str()) {
            fatal(format!("duplicate pair name `{}`", pair.name));
        }
        for (which, v) in [("old", &pair.old), ("new", &pair.new)] {
            let ctx = format!("pair `{}` {which}", pair.name);
            if !v.metrics.is_file() {
                fatal(format!("{ctx}: metrics file {} not found", v.metrics.display()));
            }
            match (&v.src, &v.graph) {
                (Some(_), Some(_)) => fatal(format!("{ctx}: give either src or graph, not both")),
                (None, None) => fatal(format!("{ctx}: needs src or graph")),
                (Some(s), None) if !s.is_dir() => fatal(format!("{ctx}: source directory {} not found", s.display())),
                (None, Some(g)) if !g.is_file() => fatal(format!("{ctx}: graph file {} not found", g.display())),
                _ => {}
            }
        }
    }
    if cfg.scenarios.is_empty() {
        fatal("no scenarios configured".into());
    }
    for s in &cfg.scenarios {
        if !SCENARIO_NAMES.contains(&s.as_str()) {
            fatal(format!("unknown scenario `{s}` (expected one of {})", SCENARIO_NAMES.join(", ")));
        }
    }
    if cfg.embedding.algorithms.is_empty() {
        fatal("embedding.algorithms is empty".into());
    }
    for algorithm in [Algorithm::Node2vec, Algorithm::Line2] {
        if let Err(e) = cfg.embedding.embed_config(algorithm, 1).validate() {
            fatal(e.to_string());
            break;
        }
    }
    if cfg.alignment.k == 0 {
        fatal("alignment.k must be at least 1".into());
    }
    if cfg.alignment.methods.is_empty() {
        fatal("alignment.methods is empty".into());
    }
    if cfg.evaluation.repetitions == 0 {
        fatal("evaluation.repetitions must be at least 1".into());
    }
    if !(cfg.evaluation.threshold > 0.0 && cfg.evaluation.threshold < 1.0) {
        fatal(format!("evaluation.threshold must be in (0, 1), got {}", cfg.evaluation.threshold));
    }
    if cfg.learner.n_trees == 0 {
        fatal("learner.n_trees must be at least 1".into());
    }
    if cfg.learner.max_features == Some(0) {
        fatal("learner.max_features must be at least 1".into());
    }
    if cfg.learner.min_samples_leaf == 0 {
        fatal("learner.min_samples_leaf must be at least 1".into());
    }
    let dim = cfg.embedding.dim;
    let mut warnings = Vec::new();
    for n in cfg.alignment.anchor_sweep(dim) {
        match n {
            AnchorCount::Count(0) => fatal("anchor counts must be at least 1".into()),
            AnchorCount::Count(c) if c < dim => {
                warnings.push(format!("anchor count {c} is below the embedding dimension {dim}"))
            }
            _ => {}
        }
    }
    out.extend(warnings.into_iter().map(|m| ConfigDiagnostic {
        severity: Severity::Warning,
        message: m,
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        scenarios = ["static_only", "emb_knn_anchor", "meta"]

        [[pairs]]
        name = "demo"
        old = { src = "old/src", metrics = "old/metrics.csv" }
        new = { graph = "new.cdn", metrics = "new/metrics.csv" }

        [embedding]
        dim = 8

        [alignment]
        anchors = [8, "all"]
    "#;

    #[test]
    fn parses_and_expands() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.evaluation.repetitions, 30);
        assert_eq!(cfg.learner.n_trees, 100);
        let labels: Vec<String> = expand_scenarios(&cfg).unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(
            labels,
            [
                "static_only",
                "emb_knn_anchor:node2vec:n=8:orthogonal",
                "emb_knn_anchor:node2vec:n=all:orthogonal",
                "meta:knn:n=8:orthogonal",
                "meta:knn:n=all:orthogonal",
            ]
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("[learner]\ntrees = 3").is_err());
    }

    #[test]
    fn default_sweep_follows_dimension() {
        let a = AlignmentSection::default();
        assert_eq!(
            a.anchor_sweep(16),
            [AnchorCount::Count(16), AnchorCount::Count(32), AnchorCount::Count(64), AnchorCount::All]
        );
    }

    #[test]
    fn validation_collects_everything() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.alignment.anchors = vec![AnchorCount::Count(4)];
        cfg.scenarios.push("bogus".into());
        let diags = validate(&cfg);
        let fatal = diags.iter().filter(|d| d.severity == Severity::Fatal).count();
        assert!(fatal >= 5, "{diags:?}");
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Warning && d.message.contains("below the embedding dimension")));
        cfg.pairs.clear();
        assert!(validate(&cfg).iter().any(|d| d.message == "no version pairs configured"));
    }

    #[test]
    fn rebase_resolves_relative_paths() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.rebase(Path::new("/data"));
        assert_eq!(cfg.pairs[0].old.src.as_deref(), Some(Path::new("/data/old/src")));
        assert_eq!(cfg.pairs[0].new.metrics, Path::new("/data/new/metrics.csv"));
    }
}
