//! Embeds a graph with two planted communities using node2vec and LINE and
//! reports how much closer same-community nodes are than the rest.
//!
//! ```bash
//! cargo run --release --example embed_communities -- [seed]
//! ```

use cvdp::embedding::{cosine, embed, Algorithm, EmbedConfig};
use cvdp::synthetic::{planted_communities, CommunitySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let spec = CommunitySpec {
        communities: 2,
        size: 10,
        p_in: 0.6,
        p_out: 0.05,
    };
    let (g, community) = planted_communities(&spec, seed);
    println!("{} nodes, {} edges", g.node_count(), g.edge_count());

    for algorithm in [Algorithm::Node2vec, Algorithm::Line2] {
        let emb = embed(&g, &EmbedConfig::new(algorithm, 16, seed))?;
        let (mut intra, mut inter) = ((0.0, 0), (0.0, 0));
        for i in 0..g.node_count() {
            for j in i + 1..g.node_count() {
                let (Some(a), Some(b)) = (emb.vector(g.name(i)), emb.vector(g.name(j))) else {
                    continue;
                };
                let acc = if community[i] == community[j] { &mut intra } else { &mut inter };
                acc.0 += cosine(a, b);
                acc.1 += 1;
            }
        }
        println!(
            "{algorithm:>8}: mean cosine within communities {:.3}, across {:.3}",
            intra.0 / intra.1 as f64,
            inter.0 / inter.1 as f64
        );
    }
    Ok(())
}
