//! Reads a PROMISE-style metrics table, normalizes inner-class names and
//! joins it with node embeddings into a feature table.
//!
//! ```bash
//! cargo run --example promise_dataset
//! ```

use cvdp::dataset::{join_features, parse_metrics_csv, static_table, METRIC_NAMES};
use cvdp::embedding::EmbeddingMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let zeros = vec!["0"; METRIC_NAMES.len() - 1].join(",");
    let csv = format!(
        "name,version,name,{},bug\n\
         ant,1.7,org.a.Parser,12,{zeros},3\n\
         ant,1.7,org.a.Parser$Token,4,{zeros},0\n\
         ant,1.7,org.a.Lexer,7,{zeros},1\n\
         ant,1.7,org.a.Unused,2,{zeros},0\n",
        METRIC_NAMES.join(",")
    );
    let records = parse_metrics_csv(csv.as_bytes(), "inline")?;
    for r in &records {
        println!("{:<18} wmc={:<3} bugs={} label={}", r.name, r.metrics[0], r.bug_count, r.label());
    }

    let emb = EmbeddingMatrix::new(
        ["org.a.Parser", "org.a.Parser.Token", "org.a.Lexer", "org.a.Orphan"].map(String::from).to_vec(),
        2,
        vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
    )?;
    let (table, stats) = join_features(&records, &emb)?;
    println!(
        "static table: {} rows; joined table: {} rows x {} features ({} metric rows, {} vectors unmatched)",
        static_table(&records).len(),
        table.len(),
        table.width(),
        stats.records_dropped,
        stats.vectors_dropped
    );
    table.write_csv(std::io::stdout())?;
    Ok(())
}
