//! Embeds two versions of a generated project independently and compares
//! anchor strategies: which modules each picks and how well the fitted
//! rotation maps the new embedding onto the old one.
//!
//! ```bash
//! cargo run --release --example anchor_selection -- [anchors]
//! ```

use cvdp::alignment::{
    anchor_matrices, fit_orthogonal, frobenius_residual, select_anchors, AnchorCount, AnchorInputs, AnchorStrategy,
};
use cvdp::embedding::{embed, Algorithm, EmbedConfig};
use cvdp::synthetic::{version_pair, PairSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(32);
    let pair = version_pair(&PairSpec::default(), 0);
    let (old_g, new_g) = (pair.old.graph.strip(), pair.new.graph.strip());
    let old_e = embed(&old_g, &EmbedConfig::new(Algorithm::Node2vec, 16, 1))?;
    let new_e = embed(&new_g, &EmbedConfig::new(Algorithm::Node2vec, 16, 2))?;
    let inputs = AnchorInputs {
        old_emb: &old_e,
        new_emb: &new_e,
        old_graph: &old_g,
        new_graph: &new_g,
    };
    // Residual over every shared module measures alignment quality.
    let all = select_anchors(&inputs, AnchorStrategy::Random, AnchorCount::All, 0)?;
    let (x_all, y_all) = anchor_matrices(&all, &old_e, &new_e)?;
    println!("{} shared modules", all.len());

    for strategy in [AnchorStrategy::Knn { k: 10 }, AnchorStrategy::Gns, AnchorStrategy::Random] {
        let anchors = select_anchors(&inputs, strategy, AnchorCount::Count(n), 3)?;
        let (x, y) = anchor_matrices(&anchors, &old_e, &new_e)?;
        let t = fit_orthogonal(&x, &y)?;
        let top: Vec<String> = anchors.pairs.iter().take(3).map(|(m, s)| format!("{m} ({s:.2})")).collect();
        println!(
            "{:>6}: {} anchors, residual on all shared {:.3}; top {}",
            strategy.kind(),
            anchors.len(),
            frobenius_residual(&t.matrix, &x_all, &y_all),
            top.join(", ")
        );
    }
    Ok(())
}
