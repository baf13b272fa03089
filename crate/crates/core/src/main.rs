use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cvdp::alignment::{
    anchor_matrices, apply_transform, fit, select_anchors, AlignmentTransform, AnchorCount, AnchorInputs,
    AnchorStrategy, Method, StrategyKind,
};
use cvdp::cdn_extract::extract_tree;
use cvdp::dataset::{join_features, load_metrics_csv, static_table, FeatureTable};
use cvdp::embedding::{embed, Algorithm, EmbedConfig, EmbeddingMatrix};
use cvdp::evaluation::{auc, f1, threshold_predictions, DEFAULT_THRESHOLD};
use cvdp::graph::{read_graph, write_cdn};
use cvdp::learner::{train_forest, ForestConfig, ForestModel};
use cvdp::pipeline::{run_pipeline, validate, ExperimentConfig, PipelineError, RunOptions, Severity};

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "cvdp", version, about = "Cross-version defect prediction with aligned dependency-graph embeddings")]
struct Cli {
    /// Directory for cached artifacts.
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Single-threaded embedding training for bit-identical reruns.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the class dependency network of a Java source tree.
    Extract {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write unresolved-reference diagnostics here.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Embed the nodes of a graph file.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "node2vec")]
        algo: Algorithm,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a transform mapping a new embedding onto an old one.
    Align(AlignArgs),
    /// Train a random forest on a metrics table, optionally with embeddings.
    Train {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        emb: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long)]
        max_features: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        /// Write the joined feature table here.
        #[arg(long)]
        table_out: Option<PathBuf>,
    },
    /// Predict defect probabilities with a trained forest.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        emb: Option<PathBuf>,
        /// Apply this alignment transform to the embedding first.
        #[arg(long)]
        transform: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment file and write the report.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Like `evaluate`, reporting into `<workspace>/report` unless `--out`.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an experiment file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct AlignArgs {
    #[arg(long)]
    old_emb: PathBuf,
    #[arg(long)]
    new_emb: PathBuf,
    #[arg(long)]
    old_graph: PathBuf,
    #[arg(long)]
    new_graph: PathBuf,
    #[arg(long, default_value = "knn")]
    strategy: StrategyKind,
    #[arg(long, default_value = "all")]
    n: AnchorCount,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value = "orthogonal")]
    method: Method,
    #[arg(long)]
    out: PathBuf,
    /// Also write the selected anchors.
    #[arg(long)]
    anchors_out: Option<PathBuf>,
    /// Also write the new embedding mapped into the old space.
    #[arg(long)]
    aligned_out: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BoxError + '_ {
    move |e| format!("{}: {e}", path.display()).into()
}

fn feature_table(metrics: &Path, emb: Option<&EmbeddingMatrix>) -> Result<FeatureTable, BoxError> {
    let records = load_metrics_csv(metrics)?;
    Ok(match emb {
        Some(e) => {
            let (table, stats) = join_features(&records, e)?;
            eprintln!(
                "joined {} modules ({} metric rows and {} vectors unmatched)",
                stats.joined, stats.records_dropped, stats.vectors_dropped
            );
            table
        }
        None => static_table(&records),
    })
}

fn align(cli: &Cli, a: &AlignArgs) -> Result<(), BoxError> {
    let old_emb = EmbeddingMatrix::read(&a.old_emb)?;
    let new_emb = EmbeddingMatrix::read(&a.new_emb)?;
    let old_graph = read_graph(&a.old_graph)?.into_stripped();
    let new_graph = read_graph(&a.new_graph)?.into_stripped();
    let inputs = AnchorInputs {
        old_emb: &old_emb,
        new_emb: &new_emb,
        old_graph: &old_graph,
        new_graph: &new_graph,
    };
    let strategy = match a.strategy {
        StrategyKind::Knn => AnchorStrategy::Knn { k: a.k },
        StrategyKind::Gns => AnchorStrategy::Gns,
        StrategyKind::Random => AnchorStrategy::Random,
    };
    let anchors = select_anchors(&inputs, strategy, a.n, cli.seed.unwrap_or(0))?;
    let (x, y) = anchor_matrices(&anchors, &old_emb, &new_emb)?;
    let t = fit(a.method, &x, &y)?;
    t.write(&a.out)?;
    if let Some(p) = &a.anchors_out {
        std::fs::write(p, anchors.to_text()).map_err(io_err(p))?;
    }
    if let Some(p) = &a.aligned_out {
        apply_transform(&t, &new_emb)?.write(p)?;
    }
    eprintln!("{} anchors, {} transform of size {}", anchors.len(), t.method, t.dim());
    Ok(())
}

fn run_report(cli: &Cli, config: &Path, out: Option<&Path>) -> Result<ExitCode, BoxError> {
    let cfg = ExperimentConfig::load(config)?;
    let opts = RunOptions {
        workspace: cli.workspace.clone(),
        seed: cli.seed,
        workers: cli.workers,
        deterministic: cli.deterministic,
    };
    let outcome = match run_pipeline(&cfg, &opts) {
        Err(PipelineError::InvalidConfig(diags)) => {
            for d in &diags {
                eprintln!("{d}");
            }
            return Ok(ExitCode::from(1));
        }
        other => other?,
    };
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => opts
            .workspace
            .or(cfg.workspace)
            .ok_or("no --out and no workspace configured")?
            .join("report"),
    };
    outcome.report.write_dir(&out)?;
    eprintln!("cache: {}", outcome.cache);
    for f in &outcome.report.failures {
        eprintln!("failed: {} {}: {}", f.pair, f.scenario, f.message);
    }
    eprintln!("report written to {}", out.display());
    Ok(if outcome.report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run(cli: &Cli) -> Result<ExitCode, BoxError> {
    match &cli.command {
        Command::Extract { src, out, diagnostics } => {
            let ex = extract_tree(src)?;
            write_cdn(&ex.graph, out)?;
            let text: String = ex.diagnostics.iter().map(|d| format!("{d}\n")).collect();
            match diagnostics {
                Some(p) => std::fs::write(p, text).map_err(io_err(p))?,
                None => eprint!("{text}"),
            }
            eprintln!("{} types, {} typed edges", ex.graph.node_count(), ex.graph.edge_count());
        }
        Command::Embed {
            graph,
            algo,
            dim,
            p,
            q,
            out,
        } => {
            let g = read_graph(graph)?.into_stripped();
            let mut cfg = EmbedConfig::new(*algo, *dim, cli.seed.unwrap_or(0));
            cfg.workers = if cli.deterministic { 1 } else { cli.workers.max(1) };
            if let Some(p) = p {
                cfg.node2vec.p = *p;
            }
            if let Some(q) = q {
                cfg.node2vec.q = *q;
            }
            let emb = embed(&g, &cfg)?;
            emb.write(out)?;
            eprintln!("embedded {} nodes in {} dimensions", emb.len(), emb.dim());
        }
        Command::Align(a) => align(cli, a)?,
        Command::Train {
            metrics,
            emb,
            model,
            trees,
            max_features,
            max_depth,
            table_out,
        } => {
            let emb = emb.as_deref().map(EmbeddingMatrix::read).transpose()?;
            let table = feature_table(metrics, emb.as_ref())?;
            if let Some(p) = table_out {
                table.write_csv(std::fs::File::create(p).map_err(io_err(p))?)?;
            }
            let cfg = ForestConfig {
                n_trees: *trees,
                max_features: *max_features,
                max_depth: *max_depth,
                seed: cli.seed.unwrap_or(0),
                ..ForestConfig::default()
            };
            let m = train_forest(&table, &cfg)?;
            m.save(model)?;
            eprintln!("trained {} trees on {} rows x {} features", m.trees.len(), table.len(), table.width());
        }
        Command::Predict {
            model,
            metrics,
            emb,
            transform,
            out,
        } => {
            let m = ForestModel::load(model)?;
            let mut emb = emb.as_deref().map(EmbeddingMatrix::read).transpose()?;
            if let (Some(t), Some(e)) = (transform, emb.as_ref()) {
                emb = Some(apply_transform(&AlignmentTransform::read(t)?, e)?);
            }
            let table = feature_table(metrics, emb.as_ref())?;
            let probs = m.predict_proba(&table.features())?;
            let preds = threshold_predictions(&probs, DEFAULT_THRESHOLD);
            let mut w = csv::Writer::from_path(out)?;
            w.write_record(["name", "probability", "prediction", "label"])?;
            for ((row, p), pred) in table.rows.iter().zip(&probs).zip(&preds) {
                w.write_record([row.name.clone(), p.to_string(), pred.to_string(), row.label.to_string()])?;
            }
            w.flush()?;
            let labels = table.labels();
            if let Ok(a) = auc(&probs, &labels) {
                eprintln!("AUC {a:.4}  F1 {:.4}", f1(&preds, &labels));
            }
        }
        Command::Evaluate { config, out } => return run_report(cli, config, Some(out)),
        Command::Pipeline { config, out } => return run_report(cli, config, out.as_deref()),
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let diags = validate(&cfg);
            for d in &diags {
                println!("{d}");
            }
            if diags.iter().any(|d| d.severity == Severity::Fatal) {
                return Ok(ExitCode::from(1));
            }
            println!("ok");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors exit 1; status 2 is reserved for partial pipeline failures
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
