//! Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::*;
use cvdp::alignment::{fit_linear, fit_orthogonal, frobenius_residual, score_gns_anchor, score_knn_anchor};
use cvdp::cdn_extract::extract_tree;
use cvdp::embedding::{cosine, embed, next_step, transition_weights, Algorithm, EmbedConfig};
use cvdp::evaluation::{auc, average_ranks, f1, wilcoxon_signed_rank};
use cvdp::graph::{read_graph, EdgeType, GraphFile, TypedEdge};
use cvdp::pipeline::{run_pipeline, RunOptions};
use cvdp::synthetic::{planted_communities, CommunitySpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn golden_extraction() -> Outcome {
    use EdgeType::*;
    let expected: BTreeSet<TypedEdge> = [
        ("Ac", "Ifc", Implements),
        ("Ac", "Cc", ClassMember),
        ("Ac", "Cc", ObjectInstantiation),
        ("Bc", "Ac", Extends),
        ("Bc", "Cc", ReturnType),
        ("Bc", "Cc", Parameter),
        ("Bc", "Ifc", Parameter),
    ]
    .into_iter()
    .map(|(a, b, t)| TypedEdge::new(a, b, t))
    .collect();
    let expected_nodes: BTreeSet<&str> = ["Ac", "Bc", "Cc", "Ifc"].into();

    let start = Instant::now();
    let ex = extract_tree(&fixture("listing")).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(1))?;
    let nodes: BTreeSet<&str> = ex.graph.nodes().map(|(n, _)| n).collect();
    let edges: BTreeSet<TypedEdge> = ex.graph.edges().cloned().collect();
    if nodes != expected_nodes || edges != expected {
        return Err(format!("library: nodes {nodes:?}, edges {edges:?}"));
    }

    // The same through the command line.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("listing.cdn");
    let status = Command::new(env!("CARGO_BIN_EXE_cvdp"))
        .args(["extract", "--src"])
        .arg(fixture("listing"))
        .arg("--out")
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("extract exited with {status}"));
    }
    let GraphFile::Cdn(g) = read_graph(&out).map_err(|e| e.to_string())? else {
        return Err("extract wrote a stripped graph".into());
    };
    let cli_edges: BTreeSet<TypedEdge> = g.edges().cloned().collect();
    check(
        cli_edges == expected && g.node_count() == 4,
        format!("4 nodes, {} typed edges, library and CLI agree", expected.len()),
    )
}

fn procrustes_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(2);
    let mut worst_clean: f64 = 0.0;
    let mut worst_noisy: f64 = 0.0;
    for d in [2, 8, 32] {
        let n = 4 * d;
        for _ in 0..100 {
            let q = random_orthogonal(d, &mut rng);
            let x = gaussian(d, n, &mut rng);
            let y = &q * &x;
            let t = fit_orthogonal(&x, &y).map_err(|e| e.to_string())?;
            worst_clean = worst_clean.max((&t.matrix - &q).norm());
            let noisy = &y + gaussian(d, n, &mut rng) * 0.01;
            let t = fit_orthogonal(&x, &noisy).map_err(|e| e.to_string())?;
            worst_noisy = worst_noisy.max((&t.matrix - &q).norm());
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    check(
        worst_clean < 1e-8 && worst_noisy < 0.1,
        format!("worst ||T-Q||_F noiseless {worst_clean:.2e}, sigma=0.01 {worst_noisy:.2e}"),
    )
}

fn orthogonal_optimality() -> Outcome {
    let mut rng = rng(3);
    let mut worst_orth: f64 = 0.0;
    let mut worst_margin = f64::INFINITY;
    for trial in 0..100 {
        let d = [2, 3, 8, 16][trial % 4];
        let n = d + rng.gen_range(0..3 * d);
        let x = gaussian(d, n, &mut rng);
        // Half related by a noisy rotation, half unrelated.
        let y = if trial % 2 == 0 {
            random_orthogonal(d, &mut rng) * &x + gaussian(d, n, &mut rng) * 0.3
        } else {
            gaussian(d, n, &mut rng)
        };
        let t = fit_orthogonal(&x, &y).map_err(|e| e.to_string())?;
        worst_orth = worst_orth.max(orthogonality_error(&t.matrix));
        let best = frobenius_residual(&t.matrix, &x, &y);
        for _ in 0..100 {
            let r = random_orthogonal(d, &mut rng);
            worst_margin = worst_margin.min(frobenius_residual(&r, &x, &y) - best);
        }
    }
    check(
        worst_orth < 1e-8 && worst_margin >= -1e-9,
        format!("max |T^T T - I| {worst_orth:.2e}, min residual margin over random rotations {worst_margin:.3e}"),
    )
}

fn linear_beats_orthogonal() -> Outcome {
    let mut rng = rng(4);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..100 {
        let d = rng.gen_range(2..=16);
        let n = rng.gen_range(d..=4 * d);
        let x = gaussian(d, n, &mut rng);
        let y = gaussian(d, n, &mut rng);
        let lin = fit_linear(&x, &y).map_err(|e| e.to_string())?;
        let orth = fit_orthogonal(&x, &y).map_err(|e| e.to_string())?;
        let gap = frobenius_residual(&lin.matrix, &x, &y) - frobenius_residual(&orth.matrix, &x, &y);
        worst = worst.max(gap);
    }
    check(
        worst <= 1e-12,
        format!("max residual(linear) - residual(orthogonal) = {worst:.3e}"),
    )
}

fn anchor_oracles() -> Outcome {
    let mut rng = rng(5);
    let mut checked = 0;
    for _ in 0..50 {
        let n = rng.gen_range(3..=50);
        let old_edges = random_edges(n, rng.gen_range(0.02..0.3), &mut rng);
        let new_edges = random_edges(n, rng.gen_range(0.02..0.3), &mut rng);
        let old_g = digraph(n, &old_edges);
        let new_g = digraph(n, &new_edges);
        let names = old_g.names().to_vec();
        let dim = rng.gen_range(1..=4);
        let old_e = lattice_embedding(&names, dim, &mut rng);
        let new_e = lattice_embedding(&names, dim, &mut rng);
        let k = rng.gen_range(1..n);
        for (i, name) in names.iter().enumerate() {
            let knn = score_knn_anchor(&old_e, &new_e, name, k).map_err(|e| e.to_string())?;
            let want = brute_knn_score(&old_e, &new_e, name, k);
            if knn != want {
                return Err(format!("knn score of {name} (n={n}, k={k}): {knn} vs brute force {want}"));
            }
            let gns = score_gns_anchor(&old_g, &new_g, name).map_err(|e| e.to_string())?;
            let want = brute_gns_score(&old_edges, &new_edges, i);
            if gns != want {
                return Err(format!("gns score of {name}: {gns} vs brute force {want}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} node scores on 50 instances match exactly"))
}

fn walk_bias() -> Outcome {
    // From 1, having arrived from 0: 0 is the return node, 2 is adjacent to
    // 0, and 3 and 4 are two hops away.
    let g = digraph(5, &[(0, 1), (1, 0), (1, 2), (1, 3), (1, 4), (0, 2), (2, 1), (3, 1), (4, 1)]);
    let steps = 100_000;
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
    let mut stats = Vec::new();
    let mut rng = rng(6);
    for (p, q) in [(1.0, 1.0), (0.25, 4.0), (4.0, 0.25)] {
        let weights = transition_weights(&g, Some(0), 1, p, q);
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        let closed_form: BTreeMap<usize, f64> = [(0, 1.0 / p), (2, 1.0), (3, 1.0 / q), (4, 1.0 / q)].into();
        for &(x, w) in &weights {
            if (w - closed_form[&x]).abs() > 1e-15 {
                return Err(format!("weight of {x} at p={p} q={q}: {w}"));
            }
        }
        let mut counts = BTreeMap::<usize, usize>::new();
        for _ in 0..steps {
            let x = next_step(&g, Some(0), 1, p, q, &mut rng).ok_or("walk stopped at a non-sink")?;
            *counts.entry(x).or_default() += 1;
        }
        let chi2: f64 = closed_form
            .iter()
            .map(|(x, w)| {
                let expected = steps as f64 * w / total;
                let observed = *counts.get(x).unwrap_or(&0) as f64;
                (observed - expected).powi(2) / expected
            })
            .sum();
        stats.push((p, q, chi2));
    }
    let detail = stats
        .iter()
        .map(|(p, q, c)| format!("(p={p},q={q}) chi2={c:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(
        stats.iter().all(|s| s.2 < critical),
        format!("{detail}; critical {critical:.2}"),
    )
}

fn embedding_separation() -> Outcome {
    let start = Instant::now();
    let spec = CommunitySpec {
        communities: 2,
        size: 10,
        p_in: 0.6,
        p_out: 0.05,
    };
    let mut wins = BTreeMap::new();
    for algorithm in [Algorithm::Node2vec, Algorithm::Line2] {
        let mut won = 0;
        for seed in 0..5 {
            let (g, community) = planted_communities(&spec, seed);
            let emb = embed(&g, &EmbedConfig::new(algorithm, 16, seed)).map_err(|e| e.to_string())?;
            let (mut intra, mut inter) = (Vec::new(), Vec::new());
            for i in 0..g.node_count() {
                for j in i + 1..g.node_count() {
                    let (Some(a), Some(b)) = (emb.vector(g.name(i)), emb.vector(g.name(j))) else {
                        continue;
                    };
                    let c = cosine(a, b);
                    if community[i] == community[j] {
                        intra.push(c)
                    } else {
                        inter.push(c)
                    }
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            if mean(&intra) > mean(&inter) {
                won += 1;
            }
        }
        wins.insert(algorithm.to_string(), won);
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    check(
        wins.values().all(|&w| w >= 4),
        format!("seeds with intra > inter cosine: {wins:?} of 5"),
    )
}

fn synthetic_cvdp() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = synthetic_experiment(dir.path(), 10, 3);
    let outcome = run_pipeline(
        &cfg,
        &RunOptions {
            workspace: Some(dir.path().join("work")),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(300))?;
    if let Some(f) = outcome.report.failures.first() {
        return Err(format!("{} {} failed: {}", f.pair, f.scenario, f.message));
    }
    let mut per_scenario: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in &outcome.report.summary {
        per_scenario.entry(&row.scenario).or_default().push(row.mean_auc);
    }
    let mean_auc: BTreeMap<&str, f64> = per_scenario
        .into_iter()
        .map(|(s, v)| (s, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let get = |s: &str| mean_auc.get(s).copied().ok_or(format!("scenario {s} missing"));

    let mut gains = Vec::new();
    for algorithm in ["node2vec", "line2"] {
        let unaligned = get(&format!("emb_no_align:{algorithm}"))?;
        for strategy in ["knn", "gns"] {
            let aligned = get(&format!("emb_{strategy}_anchor:{algorithm}:n=32:orthogonal"))?;
            gains.push((format!("{strategy}/{algorithm}"), aligned - unaligned));
        }
    }
    let best_individual = mean_auc
        .iter()
        .filter(|(s, _)| !s.starts_with("meta:"))
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let metas: Vec<(&str, f64)> = mean_auc
        .iter()
        .filter(|(s, _)| s.starts_with("meta:"))
        .map(|(s, v)| (*s, *v))
        .collect();
    let gain_ok = gains.iter().all(|(_, g)| *g >= 0.05);
    let meta_ok = !metas.is_empty() && metas.iter().all(|(_, m)| *m >= best_individual - 0.02);
    let gains_text = gains
        .iter()
        .map(|(s, g)| format!("{s} +{g:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    let metas_text = metas
        .iter()
        .map(|(s, m)| format!("{s} {m:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(
        gain_ok && meta_ok,
        format!(
            "aligned minus unaligned AUC: {gains_text}; {metas_text} vs best individual {best_individual:.3} ({:.0?})",
            start.elapsed()
        ),
    )
}

fn metric_correctness() -> Outcome {
    let mut rng = rng(9);
    let mut worst_auc: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..60);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        labels[0] = 0;
        labels[1] = 1;
        // Coarse scores so that ties are common.
        let scores: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() * 8.0).floor() / 8.0).collect();
        let got = auc(&scores, &labels).map_err(|e| e.to_string())?;
        worst_auc = worst_auc.max((got - brute_auc(&scores, &labels)).abs());

        let predictions: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (p, l) in predictions.iter().zip(&labels) {
            match (p, l) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 1) => fn_ += 1,
                _ => {}
            }
        }
        let want = if tp == 0 { 0.0 } else { (2 * tp) as f64 / (2 * tp + fp + fn_) as f64 };
        let got = f1(&predictions, &labels);
        if got != want {
            return Err(format!("F1 {got} vs confusion arithmetic {want}"));
        }
    }
    if worst_auc > 1e-12 {
        return Err(format!("AUC differs from pair counting by {worst_auc:.2e}"));
    }

    for _ in 0..200 {
        let n = rng.gen_range(5..=12);
        // Half-integer magnitudes give tied ranks.
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=6) as f64 * 0.5).collect();
        let b: Vec<f64> = a.iter().map(|x| x * if rng.gen_bool(0.5) { 2.0 } else { 0.0 }).collect();
        let r = wilcoxon_signed_rank(&a, &b).map_err(|e| e.to_string())?;
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
        let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
        let want = brute_wilcoxon_p(&ranks, w_plus);
        if !r.exact || r.p_value != want || r.w_plus != w_plus {
            return Err(format!("n={n}: exact p {} vs enumeration {want}", r.p_value));
        }
    }

    let sims = 1000;
    let mut rejections = 0;
    for _ in 0..sims {
        let a: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
        if wilcoxon_signed_rank(&a, &b).map_err(|e| e.to_string())?.p_value <= 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / sims as f64;
    check(
        (0.03..=0.07).contains(&rate),
        format!("AUC max error {worst_auc:.1e}, F1 exact, exact p matches enumeration, null rejection rate {rate:.3}"),
    )
}

fn run_cli_pipeline(config: &Path, workspace: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_cvdp"))
        .arg("--workspace")
        .arg(workspace)
        .args(["--deterministic", "pipeline", "--config"])
        .arg(config)
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("pipeline exited with {status}"))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = synthetic_experiment(dir.path(), 2, 2);
    cfg.alignment.methods = vec![cvdp::alignment::Method::Orthogonal, cvdp::alignment::Method::Linear];
    let config = dir.path().join("experiment.toml");
    std::fs::write(&config, cfg.to_toml()).map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("run_a"), dir.path().join("run_b"));
    run_cli_pipeline(&config, &a)?;
    run_cli_pipeline(&config, &b)?;
    let mut compared = Vec::new();
    for entry in std::fs::read_dir(a.join("report")).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let left = std::fs::read(a.join("report").join(&name)).map_err(|e| e.to_string())?;
        let right = std::fs::read(b.join("report").join(&name)).map_err(|e| e.to_string())?;
        if left != right {
            return Err(format!("{} differs between runs", name.to_string_lossy()));
        }
        compared.push(name.to_string_lossy().into_owned());
    }
    compared.sort();
    check(
        compared.iter().any(|n| n == "runs.csv"),
        format!("byte-identical across fresh workspaces: {}", compared.join(", ")),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("golden extraction", golden_extraction),
        ("procrustes recovery", procrustes_recovery),
        ("orthogonality and optimality", orthogonal_optimality),
        ("linear vs orthogonal residual", linear_beats_orthogonal),
        ("anchor score oracles", anchor_oracles),
        ("walk bias calibration", walk_bias),
        ("embedding separation", embedding_separation),
        ("synthetic end-to-end", synthetic_cvdp),
        ("metric correctness", metric_correctness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}] {name}: {detail} ({:.2?})", i + 1, start.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
