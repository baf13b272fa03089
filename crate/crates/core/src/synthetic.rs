//! Planted-community projects for demos and end-to-end checks.
//!
//! A version pair shares most modules; the newer version drops a fraction
//! of them, adds the same number of fresh ones and rewires a few edges.
//! Defect labels depend on community membership (visible only through the
//! dependency graph) and on one size metric.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{write_metrics_csv, ModuleRecord};
use crate::graph::{CdnGraph, EdgeType, SimpleDigraph, TypeKind, TypedEdge};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct CommunitySpec {
    pub communities: usize,
    pub size: usize,
    pub p_in: f64,
    pub p_out: f64,
}

/// Directed planted-partition graph. Node `i` belongs to community
/// `i / size`; names are zero-padded so name order equals index order.
pub fn planted_communities(spec: &CommunitySpec, seed: u64) -> (SimpleDigraph, Vec<usize>) {
    let n = spec.communities * spec.size;
    let mut rng = seed::rng(seed, &[101]);
    let names: Vec<String> = (0..n).map(|i| format!("n{i:04}")).collect();
    let community: Vec<usize> = (0..n).map(|i| i / spec.size.max(1)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let p = if community[u] == community[v] { spec.p_in } else { spec.p_out };
            if rng.gen_bool(p) {
                edges.push((names[u].clone(), names[v].clone()));
            }
        }
    }
    let g = SimpleDigraph::from_edges(names.clone(), edges.iter().map(|(a, b)| (a.as_str(), b.as_str())));
    (g, community)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub communities: usize,
    pub size: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Fraction of old modules replaced in the new version.
    pub churn: f64,
    /// Fraction of surviving edges that are resampled in the new version.
    pub rewire: f64,
    /// Weight of community membership in the defect score.
    pub community_weight: f64,
    /// Weight of the size metric in the defect score.
    pub metric_weight: f64,
    pub label_noise: f64,
}

impl Default for PairSpec {
    fn default() -> Self {
        Self {
            communities: 4,
            size: 40,
            p_in: 0.15,
            p_out: 0.005,
            churn: 0.1,
            rewire: 0.05,
            community_weight: 1.5,
            metric_weight: 1.0,
            label_noise: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticVersion {
    pub graph: CdnGraph,
    pub community: BTreeMap<String, usize>,
    pub metrics: Vec<ModuleRecord>,
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub old: SyntheticVersion,
    pub new: SyntheticVersion,
}

struct Module {
    name: String,
    community: usize,
    size_score: f64,
}

fn module(id: usize, community: usize, rng: &mut impl Rng) -> Module {
    Module {
        name: format!("synth.c{community}.M{id:04}"),
        community,
        size_score: Normal::new(0.0, 1.0).unwrap().sample(rng),
    }
}

fn sample_edges(modules: &[Module], spec: &PairSpec, rng: &mut impl Rng, keep: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (u, mu) in modules.iter().enumerate() {
        for (v, mv) in modules.iter().enumerate() {
            if u == v || !keep(u, v) {
                continue;
            }
            let p = if mu.community == mv.community { spec.p_in } else { spec.p_out };
            if rng.gen_bool(p) {
                out.push((u, v));
            }
        }
    }
    out
}

fn build_version(modules: &[Module], edges: &[(usize, usize)], spec: &PairSpec, rng: &mut impl Rng) -> SyntheticVersion {
    let mut graph = CdnGraph::new();
    for m in modules {
        graph.add_node(m.name.clone(), TypeKind::Class);
    }
    let mut indeg = vec![0usize; modules.len()];
    let mut outdeg = vec![0usize; modules.len()];
    for &(u, v) in edges {
        graph.add_edge(TypedEdge::new(modules[u].name.clone(), modules[v].name.clone(), EdgeType::ClassMember));
        outdeg[u] += 1;
        indeg[v] += 1;
    }
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut metrics = Vec::with_capacity(modules.len());
    for (i, m) in modules.iter().enumerate() {
        let defective = if m.community % 2 == 1 { 1.0 } else { -1.0 };
        let score = spec.community_weight * defective
            + spec.metric_weight * m.size_score
            + spec.label_noise * noise.sample(rng);
        let bug_count = if score > 0.0 { 1 + (score * 2.0) as u64 } else { 0 };
        let loc = (50.0 * (0.8 * m.size_score + 0.1 * noise.sample(rng)).exp()).round().max(1.0);
        let mut v = [0.0; 20];
        for x in v.iter_mut() {
            *x = (noise.sample(rng) * 2.0 + 5.0).abs().round();
        }
        v[0] = (loc / 20.0 + noise.sample(rng)).abs().round(); // wmc
        v[3] = (indeg[i] + outdeg[i]) as f64; // cbo
        v[15] = indeg[i] as f64; // ca
        v[16] = outdeg[i] as f64; // ce
        v[19] = loc;
        metrics.push(ModuleRecord {
            name: m.name.clone(),
            metrics: v,
            bug_count,
        });
    }
    metrics.sort_by(|a, b| a.name.cmp(&b.name));
    SyntheticVersion {
        graph,
        community: modules.iter().map(|m| (m.name.clone(), m.community)).collect(),
        metrics,
    }
}

pub fn version_pair(spec: &PairSpec, seed: u64) -> SyntheticPair {
    let mut rng = seed::rng(seed, &[102]);
    let n = spec.communities * spec.size;
    let old_modules: Vec<Module> = (0..n).map(|i| module(i, i / spec.size, &mut rng)).collect();
    let old_edges = sample_edges(&old_modules, spec, &mut rng, |_, _| true);
    let old = build_version(&old_modules, &old_edges, spec, &mut rng);

    let replaced = ((n as f64) * spec.churn).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut dropped = vec![false; n];
    for &i in &order[..replaced] {
        dropped[i] = true;
    }
    // survivors keep their old index order, fresh modules follow
    let mut remap = vec![usize::MAX; n];
    let mut new_modules = Vec::with_capacity(n);
    for (i, m) in old_modules.iter().enumerate() {
        if !dropped[i] {
            remap[i] = new_modules.len();
            new_modules.push(Module {
                name: m.name.clone(),
                community: m.community,
                size_score: m.size_score + 0.1 * Normal::new(0.0, 1.0).unwrap().sample(&mut rng),
            });
        }
    }
    let survivors = new_modules.len();
    for j in 0..replaced {
        let c = rng.gen_range(0..spec.communities);
        new_modules.push(module(n + j, c, &mut rng));
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for &(u, v) in &old_edges {
        if dropped[u] || dropped[v] || rng.gen_bool(spec.rewire) {
            continue;
        }
        edges.push((remap[u], remap[v]));
    }
    // fresh modules get edges to and from everything
    edges.extend(sample_edges(&new_modules, spec, &mut rng, |u, v| u >= survivors || v >= survivors));
    // replace rewired edges with resampled ones among survivors
    let target = old_edges.iter().filter(|(u, v)| !dropped[*u] && !dropped[*v]).count();
    let kept = edges.iter().filter(|(u, v)| *u < survivors && *v < survivors).count();
    let mut present: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
    let mut added = 0;
    let mut attempts = 0;
    while kept + added < target && attempts < 100 * target.max(1) {
        attempts += 1;
        let u = rng.gen_range(0..survivors);
        let v = rng.gen_range(0..survivors);
        if u == v || present.contains(&(u, v)) {
            continue;
        }
        let p = if new_modules[u].community == new_modules[v].community {
            spec.p_in
        } else {
            spec.p_out
        };
        if rng.gen_bool(p) {
            present.insert((u, v));
            edges.push((u, v));
            added += 1;
        }
    }
    let new = build_version(&new_modules, &edges, spec, &mut rng);
    SyntheticPair { old, new }
}

/// Writes one Java class per node, with one field per outgoing edge.
pub fn write_java_tree(graph: &CdnGraph, root: &Path) -> io::Result<()> {
    let mut fields: BTreeMap<&str, Vec<&str>> = graph.nodes().map(|(n, _)| (n, Vec::new())).collect();
    for e in graph.edges() {
        fields.get_mut(e.from.as_str()).expect("edge endpoints are nodes").push(&e.to);
    }
    for (name, targets) in fields {
        let (package, simple) = name.rsplit_once('.').unwrap_or(("", name));
        let mut src = String::new();
        let mut dir = root.to_path_buf();
        if !package.is_empty() {
            src.push_str(&format!("package {package};\n\n"));
            dir.extend(package.split('.'));
        }
        src.push_str(&format!("public class {simple} {{\n"));
        for (i, t) in targets.iter().enumerate() {
            src.push_str(&format!("    private {t} f{i};\n"));
        }
        src.push_str("}\n");
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join(format!("{simple}.java")), src)?;
    }
    Ok(())
}

/// Paths written by [`write_pair`].
#[derive(Debug, Clone)]
pub struct PairPaths {
    pub old_src: PathBuf,
    pub old_metrics: PathBuf,
    pub new_src: PathBuf,
    pub new_metrics: PathBuf,
}

/// Lays a pair out as `old/src`, `old/metrics.csv`, `new/src`,
/// `new/metrics.csv` under `root`.
pub fn write_pair(pair: &SyntheticPair, root: &Path) -> io::Result<PairPaths> {
    let paths = PairPaths {
        old_src: root.join("old").join("src"),
        old_metrics: root.join("old").join("metrics.csv"),
        new_src: root.join("new").join("src"),
        new_metrics: root.join("new").join("metrics.csv"),
    };
    for (v, src, csv) in [
        (&pair.old, &paths.old_src, &paths.old_metrics),
        (&pair.new, &paths.new_src, &paths.new_metrics),
    ] {
        write_java_tree(&v.graph, src)?;
        let file = std::fs::File::create(csv)?;
        write_metrics_csv(&v.metrics, file).map_err(io::Error::other)?;
    }
    Ok(paths)
}
