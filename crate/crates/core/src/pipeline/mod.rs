//! Experiment orchestration: graphs, embeddings, alignment, classifiers and
//! evaluation for every (pair, scenario, repetition) cell, with on-disk
//! caching of the expensive stages.

mod cache;
mod config;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use cache::{content_hash, Cache, CacheStats, Stage, StageStats};
pub use config::{
    expand_scenarios, validate, AlignmentSection, ConfigDiagnostic, EmbeddingSection, EvaluationSection,
    ExperimentConfig, PairConfig, Scenario, Severity, VersionConfig, SCENARIO_NAMES,
};

use crate::alignment::{
    anchor_matrices, apply_transform, fit, select_anchors, AlignError, AlignmentTransform, AnchorCount, AnchorInputs,
    AnchorStrategy, Method, StrategyKind,
};
use crate::cdn_extract::{extract_tree, java_files, ExtractError};
use crate::dataset::{join_features, load_metrics_csv, static_table, DatasetError, FeatureTable, ModuleRecord};
use crate::embedding::{embed, Algorithm, EmbedError, EmbeddingMatrix};
use crate::evaluation::{auc, f1, threshold_predictions, EvalError, EvalReport, Failure, RunRecord, SweepPoint};
use crate::graph::{parse_graph, GraphError, SimpleDigraph};
use crate::learner::{fit_forest, predict_meta, train_meta, ForestConfig, LearnError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("configuration has {} fatal problem(s)", .0.iter().filter(|d| d.severity == Severity::Fatal).count())]
    InvalidConfig(Vec<ConfigDiagnostic>),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Stage(String),
}

/// Process-level settings that are not part of the experiment file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's workspace.
    pub workspace: Option<PathBuf>,
    /// Overrides both the repetition base seed and the embedding seed.
    pub seed: Option<u64>,
    /// Worker threads; 0 means the rayon default.
    pub workers: usize,
    /// Single-threaded embedding training, so reruns are bit-identical.
    pub deterministic: bool,
}

pub struct PipelineOutcome {
    pub report: EvalReport,
    pub cache: CacheStats,
    pub scenarios: Vec<Scenario>,
}

/// Loaded inputs for one version.
struct Version {
    metrics: Vec<ModuleRecord>,
    graph: Option<Result<SimpleDigraph, String>>,
    embeddings: BTreeMap<Algorithm, Result<EmbeddingMatrix, String>>,
    graph_key: String,
}

struct PairContext<'a> {
    cfg: &'a ExperimentConfig,
    cache: &'a Cache,
    name: String,
    old: Version,
    new: Version,
    transforms: HashMap<(Algorithm, StrategyKind, AnchorCount, Method), Result<AlignmentTransform, String>>,
    base_seed: u64,
    embed_keys: BTreeMap<(bool, Algorithm), String>,
}

fn source_hash(root: &Path) -> Result<String, PipelineError> {
    let files = java_files(root)?;
    let mut parts: Vec<Vec<u8>> = vec![b"src v1".to_vec()];
    for f in &files {
        let rel = f.strip_prefix(root).unwrap_or(f).to_string_lossy().into_owned();
        parts.push(rel.into_bytes());
        parts.push(std::fs::read(f).map_err(|e| PipelineError::Io(f.display().to_string(), e))?);
    }
    Ok(content_hash(parts.iter().map(Vec::as_slice)))
}

fn load_graph(v: &VersionConfig, cache: &Cache) -> Result<(SimpleDigraph, String), PipelineError> {
    let key = match (&v.src, &v.graph) {
        (Some(src), _) => source_hash(src)?,
        (None, Some(g)) => {
            let bytes = std::fs::read(g).map_err(|e| PipelineError::Io(g.display().to_string(), e))?;
            content_hash([&b"graph v1"[..], &bytes])
        }
        (None, None) => return Err(PipelineError::Config("version needs src or graph".into())),
    };
    let graph = cache.get_or_compute(
        Stage::Graph,
        &key,
        |t| Ok(SimpleDigraph::from_text(t)?),
        |g| g.to_text(),
        || match (&v.src, &v.graph) {
            (Some(src), _) => {
                let ex = extract_tree(src)?;
                for d in &ex.diagnostics {
                    log::debug!("{d}");
                }
                Ok(ex.graph.strip())
            }
            (None, Some(g)) => {
                let text = std::fs::read_to_string(g).map_err(|e| PipelineError::Io(g.display().to_string(), e))?;
                Ok(parse_graph(&text)?.into_stripped())
            }
            (None, None) => unreachable!(),
        },
    )?;
    Ok((graph, key))
}

fn table_for(metrics: &[ModuleRecord], emb: &EmbeddingMatrix) -> Result<FeatureTable, PipelineError> {
    Ok(join_features(metrics, emb)?.0)
}

fn scores(probs: &[f64], table: &FeatureTable, threshold: f64) -> Result<(f64, f64), PipelineError> {
    let labels = table.labels();
    let a = auc(probs, &labels)?;
    let f = f1(&threshold_predictions(probs, threshold), &labels);
    Ok((a, f))
}

impl PairContext<'_> {
    fn embedding(&self, new: bool, algorithm: Algorithm) -> Result<&EmbeddingMatrix, PipelineError> {
        let v = if new { &self.new } else { &self.old };
        match &v.graph {
            Some(Err(e)) => return Err(PipelineError::Stage(e.clone())),
            None => return Err(PipelineError::Stage("graph not loaded".into())),
            Some(Ok(_)) => {}
        }
        match v.embeddings.get(&algorithm) {
            Some(Ok(e)) => Ok(e),
            Some(Err(e)) => Err(PipelineError::Stage(e.clone())),
            None => Err(PipelineError::Stage(format!("{algorithm} embedding not computed"))),
        }
    }

    fn graph(&self, new: bool) -> Result<&SimpleDigraph, PipelineError> {
        let v = if new { &self.new } else { &self.old };
        match &v.graph {
            Some(Ok(g)) => Ok(g),
            Some(Err(e)) => Err(PipelineError::Stage(e.clone())),
            None => Err(PipelineError::Stage("graph not loaded".into())),
        }
    }

    fn compute_transform(
        &self,
        algorithm: Algorithm,
        strategy: StrategyKind,
        anchors: AnchorCount,
        method: Method,
        seed: u64,
    ) -> Result<AlignmentTransform, PipelineError> {
        let old = self.embedding(false, algorithm)?;
        let new = self.embedding(true, algorithm)?;
        let k = self.cfg.alignment.k;
        let seed_part = if strategy == StrategyKind::Random { seed.to_string() } else { String::new() };
        let key = content_hash(
            [
                "transform v1",
                &self.embed_keys[&(false, algorithm)],
                &self.embed_keys[&(true, algorithm)],
                &self.old.graph_key,
                &self.new.graph_key,
                strategy.as_str(),
                &anchors.to_string(),
                &k.to_string(),
                method.as_str(),
                &seed_part,
            ]
            .iter()
            .map(|s| s.as_bytes()),
        );
        self.cache.get_or_compute(
            Stage::Transform,
            &key,
            |t| Ok(AlignmentTransform::from_text(t)?),
            |t| t.to_text(),
            || {
                let inputs = AnchorInputs {
                    old_emb: old,
                    new_emb: new,
                    old_graph: self.graph(false)?,
                    new_graph: self.graph(true)?,
                };
                let strat = match strategy {
                    StrategyKind::Knn => AnchorStrategy::Knn { k },
                    StrategyKind::Gns => AnchorStrategy::Gns,
                    StrategyKind::Random => AnchorStrategy::Random,
                };
                let set = select_anchors(&inputs, strat, anchors, seed)?;
                let (x, y) = anchor_matrices(&set, old, new)?;
                Ok(fit(method, &x, &y)?)
            },
        )
    }

    fn transform(
        &self,
        algorithm: Algorithm,
        strategy: StrategyKind,
        anchors: AnchorCount,
        method: Method,
        seed: u64,
    ) -> Result<AlignmentTransform, PipelineError> {
        if strategy == StrategyKind::Random {
            return self.compute_transform(algorithm, strategy, anchors, method, seed);
        }
        match self.transforms.get(&(algorithm, strategy, anchors, method)) {
            Some(Ok(t)) => Ok(t.clone()),
            Some(Err(e)) => Err(PipelineError::Stage(e.clone())),
            None => self.compute_transform(algorithm, strategy, anchors, method, seed),
        }
    }

    /// Old-version table and new-version table for one embedding, with the
    /// new embedding mapped into the old space when `align` is given.
    fn tables(
        &self,
        algorithm: Algorithm,
        align: Option<(StrategyKind, AnchorCount, Method)>,
        seed: u64,
    ) -> Result<(FeatureTable, FeatureTable), PipelineError> {
        let old_emb = self.embedding(false, algorithm)?;
        let new_emb = self.embedding(true, algorithm)?;
        let train = table_for(&self.old.metrics, old_emb)?;
        let test = match align {
            None => table_for(&self.new.metrics, new_emb)?,
            Some((strategy, anchors, method)) => {
                let t = self.transform(algorithm, strategy, anchors, method, seed)?;
                table_for(&self.new.metrics, &apply_transform(&t, new_emb)?)?
            }
        };
        Ok((train, test))
    }

    fn forest_config(&self, seed: u64) -> ForestConfig {
        ForestConfig {
            seed,
            ..self.cfg.learner.clone()
        }
    }

    fn train_predict(&self, train: &FeatureTable, test: &FeatureTable, seed: u64) -> Result<Vec<f64>, PipelineError> {
        let (model, _) = fit_forest(&train.features(), &train.labels(), train.feature_names.clone(), &self.forest_config(seed))?;
        Ok(model.predict_proba(&test.features())?)
    }

    fn run_rep(&self, scenario: &Scenario, rep: usize) -> Result<(f64, f64), PipelineError> {
        let seed = self.base_seed.wrapping_add(rep as u64);
        let threshold = self.cfg.evaluation.threshold;
        match *scenario {
            Scenario::StaticOnly => {
                let train = static_table(&self.old.metrics);
                let test = static_table(&self.new.metrics);
                scores(&self.train_predict(&train, &test, seed)?, &test, threshold)
            }
            Scenario::NoAlign { algorithm } => {
                let (train, test) = self.tables(algorithm, None, seed)?;
                scores(&self.train_predict(&train, &test, seed)?, &test, threshold)
            }
            Scenario::Anchored {
                strategy,
                algorithm,
                anchors,
                method,
            } => {
                let (train, test) = self.tables(algorithm, Some((strategy, anchors, method)), seed)?;
                scores(&self.train_predict(&train, &test, seed)?, &test, threshold)
            }
            Scenario::Meta {
                strategy,
                anchors,
                method,
            } => self.run_meta(strategy, anchors, method, seed),
        }
    }

    /// Fits one forest per embedding, then a logistic model on their
    /// out-of-bag probabilities over the old version. Only modules present
    /// in both embeddings take part.
    fn run_meta(
        &self,
        strategy: StrategyKind,
        anchors: AnchorCount,
        method: Method,
        seed: u64,
    ) -> Result<(f64, f64), PipelineError> {
        let mut per_algo = Vec::new();
        for algorithm in [Algorithm::Node2vec, Algorithm::Line2] {
            let (train, test) = self.tables(algorithm, Some((strategy, anchors, method)), seed)?;
            let (model, oob) = fit_forest(
                &train.features(),
                &train.labels(),
                train.feature_names.clone(),
                &self.forest_config(seed),
            )?;
            let probs = model.predict_proba(&test.features())?;
            let old: BTreeMap<String, (f64, u8)> = train.rows.iter().zip(oob).map(|(r, p)| (r.name.clone(), (p, r.label))).collect();
            let new: BTreeMap<String, (f64, u8)> = test.rows.iter().zip(probs).map(|(r, p)| (r.name.clone(), (p, r.label))).collect();
            per_algo.push((old, new));
        }
        let (a, b) = (&per_algo[0], &per_algo[1]);
        let common = |x: &BTreeMap<String, (f64, u8)>, y: &BTreeMap<String, (f64, u8)>| {
            let names: Vec<&String> = x.keys().filter(|k| y.contains_key(*k)).collect();
            let pa: Vec<f64> = names.iter().map(|n| x[*n].0).collect();
            let pb: Vec<f64> = names.iter().map(|n| y[*n].0).collect();
            let labels: Vec<u8> = names.iter().map(|n| x[*n].1).collect();
            (pa, pb, labels)
        };
        let (oa, ob, old_labels) = common(&a.0, &b.0);
        let (na, nb, new_labels) = common(&a.1, &b.1);
        let meta = train_meta(&oa, &ob, &old_labels)?;
        let probs = predict_meta(&meta, &na, &nb)?;
        let auc_v = auc(&probs, &new_labels)?;
        let f1_v = f1(&threshold_predictions(&probs, self.cfg.evaluation.threshold), &new_labels);
        Ok((auc_v, f1_v))
    }
}

fn load_version(
    v: &VersionConfig,
    version: u64,
    needs_graph: bool,
    algorithms: &BTreeSet<Algorithm>,
    cfg: &ExperimentConfig,
    cache: &Cache,
    workers: usize,
) -> Result<(Version, BTreeMap<Algorithm, String>), PipelineError> {
    let metrics = load_metrics_csv(&v.metrics)?;
    let mut loaded = Version {
        metrics,
        graph: None,
        embeddings: BTreeMap::new(),
        graph_key: String::new(),
    };
    let mut keys = BTreeMap::new();
    if !needs_graph {
        return Ok((loaded, keys));
    }
    let (graph, gkey) = match load_graph(v, cache) {
        Ok(x) => x,
        Err(e) => {
            loaded.graph = Some(Err(e.to_string()));
            return Ok((loaded, keys));
        }
    };
    let results: Vec<(Algorithm, String, Result<EmbeddingMatrix, String>)> = algorithms
        .par_iter()
        .map(|&algorithm| {
            let mut ecfg = cfg.embedding.embed_config(algorithm, workers);
            // independent initialisation per version, as for separately
            // trained embeddings
            ecfg.seed = crate::seed::derive(ecfg.seed, &[crate::seed::stream::VERSION, version]);
            let ekey = content_hash([
                &b"emb v1"[..],
                gkey.as_bytes(),
                serde_json::to_string(&ecfg).expect("config serializes").as_bytes(),
            ]);
            let res = cache
                .get_or_compute(
                    Stage::Embedding,
                    &ekey,
                    |t| Ok(EmbeddingMatrix::from_text(t)?),
                    |e| e.to_text(),
                    || Ok(embed(&graph, &ecfg)?),
                )
                .map_err(|e| format!("{algorithm} embedding: {e}"));
            (algorithm, ekey, res)
        })
        .collect();
    for (algorithm, key, res) in results {
        keys.insert(algorithm, key);
        loaded.embeddings.insert(algorithm, res);
    }
    loaded.graph = Some(Ok(graph));
    loaded.graph_key = gkey;
    Ok((loaded, keys))
}

/// Evaluates every configured scenario on every pair.
pub fn run_pipeline(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PipelineOutcome, PipelineError> {
    let diags = validate(cfg);
    if diags.iter().any(|d| d.severity == Severity::Fatal) {
        return Err(PipelineError::InvalidConfig(diags));
    }
    for d in &diags {
        log::warn!("{}", d.message);
    }
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.evaluation.base_seed = seed;
        cfg.embedding.seed = seed;
    }
    let scenarios = expand_scenarios(&cfg)?;
    let workspace = opts.workspace.clone().or_else(|| cfg.workspace.clone());
    let cache = Cache::new(workspace.as_deref());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let embed_workers = if opts.deterministic { 1 } else { opts.workers.max(1) };
    let (runs, failures) = pool.install(|| {
        let mut runs = Vec::new();
        let mut failures = Vec::new();
        for pair in &cfg.pairs {
            let (r, f) = run_pair(&cfg, pair, &scenarios, &cache, embed_workers);
            runs.extend(r);
            failures.extend(f);
        }
        (runs, failures)
    });
    let mut report = EvalReport::from_runs(runs, failures, &cfg.evaluation.baseline);
    report.failures.sort_by(|a, b| (&a.pair, &a.scenario).cmp(&(&b.pair, &b.scenario)));
    report.sweep = sweep_points(&report, &scenarios);
    let stats = cache.stats();
    log::info!("cache: {stats}");
    Ok(PipelineOutcome {
        report,
        cache: stats,
        scenarios,
    })
}

fn run_pair(
    cfg: &ExperimentConfig,
    pair: &PairConfig,
    scenarios: &[Scenario],
    cache: &Cache,
    embed_workers: usize,
) -> (Vec<RunRecord>, Vec<Failure>) {
    let fail_all = |msg: String| {
        let failures = scenarios
            .iter()
            .map(|s| Failure {
                pair: pair.name.clone(),
                scenario: s.to_string(),
                message: msg.clone(),
            })
            .collect();
        (Vec::new(), failures)
    };
    let needs_graph = scenarios.iter().any(Scenario::needs_graph);
    let algorithms: BTreeSet<Algorithm> = scenarios.iter().flat_map(|s| s.algorithms()).collect();
    let loaded = rayon::join(
        || load_version(&pair.old, 0, needs_graph, &algorithms, cfg, cache, embed_workers),
        || load_version(&pair.new, 1, needs_graph, &algorithms, cfg, cache, embed_workers),
    );
    let ((old, old_keys), (new, new_keys)) = match loaded {
        (Ok(o), Ok(n)) => (o, n),
        (Err(e), _) => return fail_all(format!("old version: {e}")),
        (_, Err(e)) => return fail_all(format!("new version: {e}")),
    };
    let mut embed_keys = BTreeMap::new();
    for (a, k) in old_keys {
        embed_keys.insert((false, a), k);
    }
    for (a, k) in new_keys {
        embed_keys.insert((true, a), k);
    }
    let mut ctx = PairContext {
        cfg,
        cache,
        name: pair.name.clone(),
        old,
        new,
        transforms: HashMap::new(),
        base_seed: cfg.evaluation.base_seed,
        embed_keys,
    };

    // Deterministic anchor strategies give one transform per setting; fit
    // them once up front.
    let mut wanted = BTreeSet::new();
    for s in scenarios {
        match *s {
            Scenario::Anchored {
                strategy,
                algorithm,
                anchors,
                method,
            } if strategy != StrategyKind::Random => {
                wanted.insert((algorithm, strategy, anchors, method));
            }
            Scenario::Meta {
                strategy,
                anchors,
                method,
            } if strategy != StrategyKind::Random => {
                for algorithm in [Algorithm::Node2vec, Algorithm::Line2] {
                    wanted.insert((algorithm, strategy, anchors, method));
                }
            }
            _ => {}
        }
    }
    let fitted: Vec<_> = wanted
        .into_par_iter()
        .map(|key @ (a, s, n, m)| (key, ctx.compute_transform(a, s, n, m, ctx.base_seed).map_err(|e| e.to_string())))
        .collect();
    ctx.transforms = fitted.into_iter().collect();

    let reps = cfg.evaluation.repetitions;
    let cells: Vec<(usize, usize)> = (0..scenarios.len()).flat_map(|s| (0..reps).map(move |r| (s, r))).collect();
    let results: Vec<Result<(f64, f64), PipelineError>> =
        cells.par_iter().map(|&(s, r)| ctx.run_rep(&scenarios[s], r)).collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (si, scenario) in scenarios.iter().enumerate() {
        let cell = &results[si * reps..(si + 1) * reps];
        if let Some(Err(e)) = cell.iter().find(|r| r.is_err()) {
            log::warn!("{} / {scenario}: {e}", ctx.name);
            failures.push(Failure {
                pair: ctx.name.clone(),
                scenario: scenario.to_string(),
                message: e.to_string(),
            });
            continue;
        }
        for (rep, r) in cell.iter().enumerate() {
            let (a, f) = *r.as_ref().expect("checked above");
            runs.push(RunRecord {
                pair: ctx.name.clone(),
                scenario: scenario.to_string(),
                rep,
                auc: a,
                f1: f,
            });
        }
    }
    (runs, failures)
}

fn sweep_points(report: &EvalReport, scenarios: &[Scenario]) -> Vec<SweepPoint> {
    let by_label: HashMap<String, (usize, &Scenario)> =
        scenarios.iter().enumerate().map(|(i, s)| (s.to_string(), (i, s))).collect();
    let mut out = Vec::new();
    for row in &report.summary {
        let Some(&(order, s)) = by_label.get(&row.scenario) else { continue };
        let (strategy, algorithm, anchors, method) = match *s {
            Scenario::Anchored {
                strategy,
                algorithm,
                anchors,
                method,
            } => (strategy.to_string(), algorithm.to_string(), anchors, method),
            Scenario::Meta {
                strategy,
                anchors,
                method,
            } => (strategy.to_string(), "meta".to_string(), anchors, method),
            _ => continue,
        };
        out.push((row.pair.clone(), order, SweepPoint {
            pair: row.pair.clone(),
            strategy,
            algorithm,
            method: method.to_string(),
            anchors: anchors.to_string(),
            mean_auc: row.mean_auc,
            mean_f1: row.mean_f1,
        }));
    }
    // numeric anchor order rather than label order
    out.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
    out.into_iter().map(|(_, _, p)| p).collect()
}
