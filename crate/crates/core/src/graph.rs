//! Class dependency network data model.
//!
//! [`CdnGraph`] is the typed, directed multigraph produced by extraction.
//! [`SimpleDigraph`] is its stripped form: one unweighted edge per ordered
//! node pair, which is what the embedding algorithms consume.
//!
//! Both graphs serialize to a line-oriented text format:
//!
//! ```text
//! cdn v1
//! N org.example.Foo class
//! E org.example.Foo org.example.Bar CM
//! ```
//!
//! ```text
//! digraph v1
//! N org.example.Foo
//! E org.example.Foo org.example.Bar
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        message: message.into(),
    }
}

/// Kind of a declared Java type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Annotation,
}

impl TypeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TypeKind::Class => "class",
            TypeKind::Interface => "interface",
            TypeKind::Enum => "enum",
            TypeKind::Annotation => "annotation",
        }
    }
}

impl fmt::Display for TypeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TypeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "class" => Ok(TypeKind::Class),
            "interface" => Ok(TypeKind::Interface),
            "enum" => Ok(TypeKind::Enum),
            "annotation" => Ok(TypeKind::Annotation),
            other => Err(format!("unknown type kind `{other}`")),
        }
    }
}

/// The ten dependency relations a CDN edge can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    /// A class extends another class.
    Extends,
    /// A class implements an interface.
    Implements,
    /// A type appears as a method return type.
    ReturnType,
    /// A type appears as a local variable type.
    Variable,
    /// A type appears as an instance field type.
    ClassMember,
    /// A type appears in a `new` expression.
    ObjectInstantiation,
    /// A type is used as an annotation.
    Annotation,
    /// A type appears as a method parameter type.
    Parameter,
    /// A type appears as a static field type.
    StaticClassMember,
    /// A static method of a type is called through the type name.
    StaticMethodCall,
}

impl EdgeType {
    pub const ALL: [EdgeType; 10] = [
        EdgeType::Extends,
        EdgeType::Implements,
        EdgeType::ReturnType,
        EdgeType::Variable,
        EdgeType::ClassMember,
        EdgeType::ObjectInstantiation,
        EdgeType::Annotation,
        EdgeType::Parameter,
        EdgeType::StaticClassMember,
        EdgeType::StaticMethodCall,
    ];

    /// Short token used in graph files.
    pub fn token(self) -> &'static str {
        match self {
            EdgeType::Extends => "E",
            EdgeType::Implements => "I",
            EdgeType::ReturnType => "R",
            EdgeType::Variable => "V",
            EdgeType::ClassMember => "CM",
            EdgeType::ObjectInstantiation => "OI",
            EdgeType::Annotation => "A",
            EdgeType::Parameter => "P",
            EdgeType::StaticClassMember => "SCM",
            EdgeType::StaticMethodCall => "SMC",
        }
    }

    pub fn from_token(token: &str) -> Option<EdgeType> {
        EdgeType::ALL.into_iter().find(|t| t.token() == token)
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A typed dependency `from -> to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypedEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeType,
}

impl TypedEdge {
    pub fn new(from: impl Into<String>, to: impl Into<String>, kind: EdgeType) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            kind,
        }
    }
}

/// Directed typed multigraph over fully-qualified type names.
///
/// Parallel edges between an ordered pair are allowed when their types
/// differ; a given `(from, to, type)` triple is stored once. Self-loops are
/// rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CdnGraph {
    nodes: BTreeMap<String, TypeKind>,
    edges: BTreeSet<TypedEdge>,
}

impl CdnGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: impl Into<String>, kind: TypeKind) {
        self.nodes.insert(name.into(), kind);
    }

    /// Adds an edge between two existing nodes. Returns `false` when the
    /// edge is a self-loop, references an unknown node, or already exists.
    pub fn add_edge(&mut self, edge: TypedEdge) -> bool {
        if edge.from == edge.to
            || !self.nodes.contains_key(&edge.from)
            || !self.nodes.contains_key(&edge.to)
        {
            return false;
        }
        self.edges.insert(edge)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, TypeKind)> {
        self.nodes.iter().map(|(n, k)| (n.as_str(), *k))
    }

    pub fn node_kind(&self, name: &str) -> Option<TypeKind> {
        self.nodes.get(name).copied()
    }

    /// Edges in canonical `(from, to, type)` order.
    pub fn edges(&self) -> impl Iterator<Item = &TypedEdge> {
        self.edges.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge types present for the ordered pair, in canonical order.
    pub fn edge_types(&self, from: &str, to: &str) -> Vec<EdgeType> {
        self.edges
            .iter()
            .filter(|e| e.from == from && e.to == to)
            .map(|e| e.kind)
            .collect()
    }

    /// Collapses the multigraph into a simple unweighted digraph.
    pub fn strip(&self) -> SimpleDigraph {
        let names: Vec<String> = self.nodes.keys().cloned().collect();
        let pairs = self.edges.iter().map(|e| (e.from.as_str(), e.to.as_str()));
        SimpleDigraph::from_edges(names, pairs)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("cdn v1\n");
        for (name, kind) in &self.nodes {
            out.push_str(&format!("N {name} {kind}\n"));
        }
        for e in &self.edges {
            out.push_str(&format!("E {} {} {}\n", e.from, e.to, e.kind));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut records = records(text);
        expect_header(&mut records, "cdn v1")?;
        let mut g = CdnGraph::new();
        let mut pending = Vec::new();
        for (line, fields) in records {
            match fields.as_slice() {
                ["N", name, kind] => {
                    let kind = kind.parse::<TypeKind>().map_err(|m| parse_err(line, m))?;
                    if g.nodes.insert(name.to_string(), kind).is_some() {
                        return Err(parse_err(line, format!("duplicate node `{name}`")));
                    }
                }
                ["E", from, to, token] => {
                    let kind = EdgeType::from_token(token)
                        .ok_or_else(|| parse_err(line, format!("unknown edge type `{token}`")))?;
                    pending.push((line, TypedEdge::new(*from, *to, kind)));
                }
                _ => return Err(parse_err(line, format!("malformed record `{}`", fields.join(" ")))),
            }
        }
        for (line, edge) in pending {
            check_edge(&g.nodes, line, &edge.from, &edge.to)?;
            g.edges.insert(edge);
        }
        Ok(g)
    }
}

fn check_edge<V>(nodes: &BTreeMap<String, V>, line: usize, from: &str, to: &str) -> Result<(), GraphError> {
    for end in [from, to] {
        if !nodes.contains_key(end) {
            return Err(parse_err(line, format!("edge references unknown node `{end}`")));
        }
    }
    if from == to {
        return Err(parse_err(line, format!("self-loop on `{from}`")));
    }
    Ok(())
}

/// Unweighted simple digraph with nodes addressed by index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimpleDigraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl SimpleDigraph {
    /// Builds a digraph from node names (deduplicated, sorted) and name
    /// pairs. Pairs naming unknown nodes and self-loops are ignored.
    pub fn from_edges<'a, I>(names: Vec<String>, edges: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut names = names;
        names.sort();
        names.dedup();
        let index: HashMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut out = vec![Vec::new(); names.len()];
        let mut inc = vec![Vec::new(); names.len()];
        for (a, b) in edges {
            if let (Some(&u), Some(&v)) = (index.get(a), index.get(b)) {
                if u != v {
                    out[u].push(v);
                    inc[v].push(u);
                }
            }
        }
        for list in out.iter_mut().chain(inc.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Self {
            names,
            index,
            out,
            inc,
        }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Sorted successor indices.
    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.out[idx]
    }

    /// Sorted predecessor indices.
    pub fn predecessors(&self, idx: usize) -> &[usize] {
        &self.inc[idx]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out[from].binary_search(&to).is_ok()
    }

    /// In-degree plus out-degree.
    pub fn degree(&self, idx: usize) -> usize {
        self.out[idx].len() + self.inc[idx].len()
    }

    /// Union of in- and out-neighbors of `name`, or `None` for an unknown
    /// node.
    pub fn neighbor_set(&self, name: &str) -> Option<BTreeSet<&str>> {
        let idx = self.index_of(name)?;
        Some(
            self.out[idx]
                .iter()
                .chain(self.inc[idx].iter())
                .map(|&i| self.names[i].as_str())
                .collect(),
        )
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    /// Stripping a simple digraph is the identity.
    pub fn strip(&self) -> SimpleDigraph {
        self.clone()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("digraph v1\n");
        for name in &self.names {
            out.push_str(&format!("N {name}\n"));
        }
        for (u, v) in self.edges() {
            out.push_str(&format!("E {} {}\n", self.names[u], self.names[v]));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut records = records(text);
        expect_header(&mut records, "digraph v1")?;
        let mut nodes = BTreeMap::new();
        let mut pending = Vec::new();
        for (line, fields) in records {
            match fields.as_slice() {
                ["N", name] => {
                    if nodes.insert(name.to_string(), ()).is_some() {
                        return Err(parse_err(line, format!("duplicate node `{name}`")));
                    }
                }
                ["E", from, to] => pending.push((line, from.to_string(), to.to_string())),
                ["E", _, _, token] => {
                    return Err(parse_err(
                        line,
                        format!("unexpected edge type `{token}` in stripped graph"),
                    ))
                }
                _ => return Err(parse_err(line, format!("malformed record `{}`", fields.join(" ")))),
            }
        }
        for (line, from, to) in &pending {
            check_edge(&nodes, *line, from, to)?;
        }
        let names = nodes.into_keys().collect();
        Ok(SimpleDigraph::from_edges(
            names,
            pending.iter().map(|(_, a, b)| (a.as_str(), b.as_str())),
        ))
    }
}

/// Either graph flavor, as read from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphFile {
    Cdn(CdnGraph),
    Stripped(SimpleDigraph),
}

impl GraphFile {
    /// The stripped view, stripping a CDN if needed.
    pub fn into_stripped(self) -> SimpleDigraph {
        match self {
            GraphFile::Cdn(g) => g.strip(),
            GraphFile::Stripped(g) => g,
        }
    }
}

pub fn parse_graph(text: &str) -> Result<GraphFile, GraphError> {
    match records(text).next() {
        Some((_, fields)) if fields == ["digraph", "v1"] => {
            SimpleDigraph::from_text(text).map(GraphFile::Stripped)
        }
        _ => CdnGraph::from_text(text).map(GraphFile::Cdn),
    }
}

pub fn read_graph(path: &Path) -> Result<GraphFile, GraphError> {
    parse_graph(&read_to_string(path)?)
}

pub fn write_cdn(graph: &CdnGraph, path: &Path) -> Result<(), GraphError> {
    write_string(path, &graph.to_text())
}

pub fn write_digraph(graph: &SimpleDigraph, path: &Path) -> Result<(), GraphError> {
    write_string(path, &graph.to_text())
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_string(path: &Path, text: &str) -> Result<(), GraphError> {
    fs::write(path, text).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-empty, non-comment lines split on whitespace, with 1-based line
/// numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

fn expect_header<'a, I>(records: &mut I, header: &str) -> Result<(), GraphError>
where
    I: Iterator<Item = (usize, Vec<&'a str>)>,
{
    match records.next() {
        Some((_, fields)) if fields.join(" ") == header => Ok(()),
        Some((line, fields)) => Err(parse_err(
            line,
            format!("expected header `{header}`, found `{}`", fields.join(" ")),
        )),
        None => Err(parse_err(1, format!("missing header `{header}`"))),
    }
}
