//! Scores two classifiers on repeated splits and tests whether their AUCs
//! differ with the Wilcoxon signed-rank test.
//!
//! ```bash
//! cargo run --example significance
//! ```

use rand::Rng;
use rand_distr::StandardNormal;

use cvdp::evaluation::{auc, f1, threshold_predictions, wilcoxon_signed_rank, Confusion};
use cvdp::seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seed::rng(3, &[]);
    let (mut weak, mut strong) = (Vec::new(), Vec::new());
    for rep in 0..20 {
        let labels: Vec<u8> = (0..200).map(|_| u8::from(rng.gen_bool(0.3))).collect();
        // Scores separate the classes by a signal strength plus noise.
        let mut scores = |signal: f64| -> Vec<f64> {
            labels
                .iter()
                .map(|&l| 1.0 / (1.0 + (-(signal * f64::from(l) - signal / 2.0 + rng.sample::<f64, _>(StandardNormal))).exp()))
                .collect()
        };
        let (a, b) = (scores(0.8), scores(1.4));
        weak.push(auc(&a, &labels)?);
        strong.push(auc(&b, &labels)?);
        if rep == 0 {
            let preds = threshold_predictions(&b, 0.5);
            let c = Confusion::new(&preds, &labels);
            println!(
                "first split, stronger model: tp={} fp={} fn={} tn={} precision {:.3} recall {:.3} F1 {:.3}",
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                c.precision(),
                c.recall(),
                f1(&preds, &labels)
            );
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("mean AUC weak {:.3}, strong {:.3}", mean(&weak), mean(&strong));
    let w = wilcoxon_signed_rank(&strong, &weak)?;
    println!(
        "signed-rank: n={} W+={} statistic={} p={:.2e} ({})",
        w.n,
        w.w_plus,
        w.statistic,
        w.p_value,
        if w.exact { "exact" } else { "normal approximation" }
    );
    Ok(())
}
