//! Builds the class dependency network of a Java source tree and prints its
//! typed edges, the stripped digraph and any resolution diagnostics.
//!
//! ```bash
//! cargo run --example extract_cdn -- crates/core/tests/fixtures/listing
//! ```

use std::path::PathBuf;

use cvdp::cdn_extract::extract_tree;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/listing"));
    let ex = extract_tree(&root)?;
    let g = &ex.graph;

    println!("{} types", g.node_count());
    for (name, kind) in g.nodes() {
        println!("  {name} ({})", kind.as_str());
    }
    println!("{} typed edges", g.edge_count());
    for e in g.edges() {
        println!("  {} -[{}]-> {}", e.from, e.kind.token(), e.to);
    }
    let s = g.strip();
    println!("stripped: {} edges", s.edge_count());
    for (u, v) in s.edges() {
        println!("  {} -> {}", s.name(u), s.name(v));
    }
    for d in &ex.diagnostics {
        println!("note: {d}");
    }
    Ok(())
}
