//! Trains defect classifiers on an old release and scores a new one: a
//! static-metric forest, an embedding-augmented forest per algorithm and a
//! logistic meta-model combining the two embedding forests.
//!
//! ```bash
//! cargo run --release --example forest_and_meta
//! ```

use cvdp::alignment::{anchor_matrices, apply_transform, fit_orthogonal, select_anchors, AnchorCount, AnchorInputs, AnchorStrategy};
use cvdp::dataset::{join_features, static_table, FeatureTable};
use cvdp::embedding::{embed, Algorithm, EmbedConfig};
use cvdp::evaluation::{auc, f1, threshold_predictions, DEFAULT_THRESHOLD};
use cvdp::learner::{fit_forest, predict_meta, train_meta, ForestConfig};
use cvdp::synthetic::{version_pair, PairSpec};

fn report(name: &str, probs: &[f64], labels: &[u8]) -> Result<(), Box<dyn std::error::Error>> {
    let preds = threshold_predictions(probs, DEFAULT_THRESHOLD);
    println!("{name:<22} AUC {:.3}  F1 {:.3}", auc(probs, labels)?, f1(&preds, labels));
    Ok(())
}

/// Restricts a table to the named modules, in the given order.
fn subset(t: &FeatureTable, names: &[String]) -> FeatureTable {
    let rows = names
        .iter()
        .filter_map(|n| t.rows.iter().find(|r| &r.name == n).cloned())
        .collect();
    FeatureTable {
        feature_names: t.feature_names.clone(),
        rows,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = version_pair(&PairSpec::default(), 1);
    let cfg = ForestConfig {
        seed: 5,
        ..ForestConfig::default()
    };

    let (train, test) = (static_table(&pair.old.metrics), static_table(&pair.new.metrics));
    let (model, _) = fit_forest(&train.features(), &train.labels(), train.feature_names.clone(), &cfg)?;
    report("static metrics", &model.predict_proba(&test.features())?, &test.labels())?;

    let (old_g, new_g) = (pair.old.graph.strip(), pair.new.graph.strip());
    let mut per_algorithm = Vec::new();
    for algorithm in [Algorithm::Node2vec, Algorithm::Line2] {
        let old_e = embed(&old_g, &EmbedConfig::new(algorithm, 16, 1))?;
        let new_e = embed(&new_g, &EmbedConfig::new(algorithm, 16, 2))?;
        let inputs = AnchorInputs {
            old_emb: &old_e,
            new_emb: &new_e,
            old_graph: &old_g,
            new_graph: &new_g,
        };
        let anchors = select_anchors(&inputs, AnchorStrategy::Knn { k: 10 }, AnchorCount::Count(32), 0)?;
        let (x, y) = anchor_matrices(&anchors, &old_e, &new_e)?;
        let aligned = apply_transform(&fit_orthogonal(&x, &y)?, &new_e)?;

        let (train, _) = join_features(&pair.old.metrics, &old_e)?;
        let (test, _) = join_features(&pair.new.metrics, &aligned)?;
        let (model, oob) = fit_forest(&train.features(), &train.labels(), train.feature_names.clone(), &cfg)?;
        let probs = model.predict_proba(&test.features())?;
        report(&format!("{algorithm} aligned"), &probs, &test.labels())?;
        per_algorithm.push((train, oob, test, probs));
    }

    // The meta-model learns from out-of-bag probabilities on the old release,
    // over modules both embeddings cover.
    let [(tr_a, oob_a, te_a, p_a), (tr_b, oob_b, te_b, p_b)] = &per_algorithm[..] else {
        unreachable!()
    };
    let pick = |t: &FeatureTable, p: &[f64], names: &[String]| -> Vec<f64> {
        names
            .iter()
            .map(|n| p[t.rows.iter().position(|r| &r.name == n).unwrap()])
            .collect()
    };
    let shared = |a: &FeatureTable, b: &FeatureTable| -> Vec<String> {
        a.rows.iter().map(|r| r.name.clone()).filter(|n| b.rows.iter().any(|r| &r.name == n)).collect()
    };
    let train_names = shared(tr_a, tr_b);
    let meta = train_meta(
        &pick(tr_a, oob_a, &train_names),
        &pick(tr_b, oob_b, &train_names),
        &subset(tr_a, &train_names).labels(),
    )?;
    let test_names = shared(te_a, te_b);
    let probs = predict_meta(&meta, &pick(te_a, p_a, &test_names), &pick(te_b, p_b, &test_names))?;
    println!("meta weights {:?}", meta.weights.map(|w| (w * 1000.0).round() / 1000.0));
    report("meta-model", &probs, &subset(te_a, &test_names).labels())?;
    Ok(())
}
