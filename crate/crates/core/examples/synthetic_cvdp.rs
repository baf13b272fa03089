//! End-to-end cross-version defect prediction on generated projects.
//!
//! Generates a version pair with planted module communities, writes it as
//! Java sources plus metric tables, runs every scenario and prints the mean
//! AUC/F1 of each.
//!
//! ```bash
//! cargo run --release --example synthetic_cvdp -- [seeds] [repetitions]
//! ```

use cvdp::alignment::AnchorCount;
use cvdp::embedding::Algorithm;
use cvdp::pipeline::{run_pipeline, ExperimentConfig, PairConfig, RunOptions, VersionConfig};
use cvdp::synthetic::{version_pair, write_pair, PairSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let dir = tempfile::tempdir()?;
    let mut cfg = ExperimentConfig::from_toml("")?;
    for seed in 0..seeds {
        let pair = version_pair(&PairSpec::default(), seed);
        let paths = write_pair(&pair, &dir.path().join(format!("pair{seed}")))?;
        cfg.pairs.push(PairConfig {
            name: format!("synth{seed}"),
            old: VersionConfig {
                src: Some(paths.old_src),
                graph: None,
                metrics: paths.old_metrics,
            },
            new: VersionConfig {
                src: Some(paths.new_src),
                graph: None,
                metrics: paths.new_metrics,
            },
        });
    }
    cfg.embedding.dim = 16;
    cfg.embedding.algorithms = vec![Algorithm::Node2vec, Algorithm::Line2];
    cfg.alignment.anchors = vec![AnchorCount::Count(32), AnchorCount::All];
    cfg.evaluation.repetitions = reps;

    let outcome = run_pipeline(
        &cfg,
        &RunOptions {
            workspace: Some(dir.path().join("work")),
            deterministic: true,
            ..Default::default()
        },
    )?;
    for f in &outcome.report.failures {
        println!("FAILED {} {}: {}", f.pair, f.scenario, f.message);
    }
    let mut by_scenario: std::collections::BTreeMap<&str, Vec<(f64, f64)>> = Default::default();
    for row in &outcome.report.summary {
        by_scenario.entry(&row.scenario).or_default().push((row.mean_auc, row.mean_f1));
    }
    println!("{:<45} {:>8} {:>8}", "scenario", "AUC", "F1");
    for (scenario, v) in by_scenario {
        let n = v.len() as f64;
        let auc = v.iter().map(|x| x.0).sum::<f64>() / n;
        let f1 = v.iter().map(|x| x.1).sum::<f64>() / n;
        println!("{scenario:<45} {auc:>8.3} {f1:>8.3}");
    }
    println!("cache: {}", outcome.cache);
    Ok(())
}
