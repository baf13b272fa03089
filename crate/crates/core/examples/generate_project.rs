//! Writes a synthetic version pair (Java sources + PROMISE-style metric
//! tables) and a ready-to-run experiment file.
//!
//! ```bash
//! cargo run --example generate_project -- /tmp/demo
//! cargo run --release -- --workspace /tmp/demo/work validate --config /tmp/demo/experiment.toml
//! cargo run --release -- --workspace /tmp/demo/work --deterministic pipeline --config /tmp/demo/experiment.toml
//! ```

use std::path::PathBuf;

use cvdp::synthetic::{version_pair, write_pair, PairSpec};

const EXPERIMENT: &str = r#"workspace = "work"
scenarios = ["static_only", "emb_no_align", "emb_random_anchor", "emb_knn_anchor", "emb_gns_anchor", "meta"]

[[pairs]]
name = "synth"
old = { src = "old/src", metrics = "old/metrics.csv" }
new = { src = "new/src", metrics = "new/metrics.csv" }

[embedding]
algorithms = ["node2vec", "line2"]
dim = 16

[alignment]
anchors = [16, 64, "all"]
k = 10
methods = ["orthogonal", "linear"]

[learner]
n_trees = 100

[evaluation]
repetitions = 5
base_seed = 0
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "demo".into()).into();
    let seed: u64 = std::env::args().nth(2).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let pair = version_pair(&PairSpec::default(), seed);
    write_pair(&pair, &root)?;
    std::fs::write(root.join("experiment.toml"), EXPERIMENT)?;
    println!(
        "wrote {} old and {} new modules under {}",
        pair.old.graph.node_count(),
        pair.new.graph.node_count(),
        root.display()
    );
    Ok(())
}
