//! Class dependency network extraction from Java sources.
//!
//! Extraction runs in two passes. The first parses every file and collects
//! the declared types into a [`TypeDictionary`]. The second resolves each
//! type use found in the first pass against that dictionary and emits a
//! typed edge for every in-project reference. Uses of external types (JDK,
//! libraries) resolve to nothing and produce no edge.

mod lexer;
mod parser;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{CdnGraph, EdgeType, TypeKind, TypedEdge};

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_source, DeclaredType, Import, ParsedUnit, RawRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("source root {0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("failed to walk {path}: {message}")]
    Walk { path: PathBuf, message: String },
}

/// Non-fatal extraction finding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub path: PathBuf,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "warning {}:{}: {}", self.path.display(), self.line, self.message)
    }
}

/// Where a reference was found.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    pub path: PathBuf,
    pub line: usize,
}

/// A resolved in-project reference.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceRef {
    pub from: String,
    pub to: String,
    pub edge_type: EdgeType,
    pub site: Site,
}

/// All types declared in the analyzed source tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeDictionary {
    entries: BTreeMap<String, TypeKind>,
    packages: BTreeMap<String, BTreeSet<String>>,
}

impl TypeDictionary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, fqn: &str) -> bool {
        self.entries.contains_key(fqn)
    }

    pub fn kind(&self, fqn: &str) -> Option<TypeKind> {
        self.entries.get(fqn).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, TypeKind)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Names declared in `package` (empty string for the default package),
    /// relative to the package: `Outer` and `Outer.Inner`.
    pub fn package_members(&self, package: &str) -> Option<&BTreeSet<String>> {
        self.packages.get(package)
    }

    fn insert(&mut self, package: Option<&str>, fqn: &str, kind: TypeKind) -> bool {
        if self.entries.contains_key(fqn) {
            return false;
        }
        self.entries.insert(fqn.to_string(), kind);
        let pkg = package.unwrap_or("");
        let relative = if pkg.is_empty() {
            fqn
        } else {
            &fqn[pkg.len() + 1..]
        };
        self.packages
            .entry(pkg.to_string())
            .or_default()
            .insert(relative.to_string());
        true
    }
}

/// Context for resolving a type name: the compilation unit's package and
/// imports, plus the enclosing declared types (innermost first).
#[derive(Debug, Clone, Default)]
pub struct ResolveContext {
    pub package: Option<String>,
    pub imports: Vec<Import>,
    pub scope: Vec<String>,
}

impl ResolveContext {
    pub fn new(package: Option<&str>, imports: Vec<Import>) -> Self {
        Self {
            package: package.map(str::to_string),
            imports,
            scope: Vec::new(),
        }
    }
}

/// Resolves a simple or dotted type name to a declared type.
///
/// Order: exact fully-qualified match, member types of enclosing
/// declarations, single-type import, same package, wildcard imports in
/// declaration order. A single-type import of an external type shadows the
/// later rules, so the name resolves to nothing.
pub fn resolve_type_name(name: &str, ctx: &ResolveContext, dict: &TypeDictionary) -> Option<String> {
    resolve_with_diagnostics(name, ctx, dict, &mut Vec::new())
}

/// [`resolve_type_name`], reporting ambiguous wildcard matches into `notes`.
pub fn resolve_with_diagnostics(
    name: &str,
    ctx: &ResolveContext,
    dict: &TypeDictionary,
    notes: &mut Vec<String>,
) -> Option<String> {
    if dict.contains(name) {
        return Some(name.to_string());
    }
    let (head, rest) = match name.split_once('.') {
        Some((h, r)) => (h, Some(r)),
        None => (name, None),
    };
    let with_rest = |prefix: &str| match rest {
        Some(r) => format!("{prefix}.{r}"),
        None => prefix.to_string(),
    };

    for outer in &ctx.scope {
        let candidate = format!("{outer}.{name}");
        if dict.contains(&candidate) {
            return Some(candidate);
        }
    }
    if let Some(imp) = ctx
        .imports
        .iter()
        .find(|i| !i.wildcard && i.path.rsplit('.').next() == Some(head))
    {
        let candidate = with_rest(&imp.path);
        return dict.contains(&candidate).then_some(candidate);
    }
    if let Some(pkg) = &ctx.package {
        let candidate = format!("{pkg}.{name}");
        if dict.contains(&candidate) {
            return Some(candidate);
        }
    }
    let matches: Vec<String> = ctx
        .imports
        .iter()
        .filter(|i| i.wildcard)
        .map(|i| format!("{}.{name}", i.path))
        .filter(|c| dict.contains(c))
        .collect();
    if matches.len() > 1 {
        notes.push(format!(
            "ambiguous type `{name}` via wildcard imports: {}; using {}",
            matches.join(", "),
            matches[0]
        ));
    }
    matches.into_iter().next()
}

/// Builds the dictionary of declared types. Duplicate fully-qualified names
/// keep the first declaration.
pub fn build_type_dictionary(units: &[ParsedUnit]) -> TypeDictionary {
    build_type_dictionary_with_diagnostics(units).0
}

pub fn build_type_dictionary_with_diagnostics(units: &[ParsedUnit]) -> (TypeDictionary, Vec<Diagnostic>) {
    let mut dict = TypeDictionary::default();
    let mut diags = Vec::new();
    for unit in units {
        for ty in &unit.types {
            if !dict.insert(unit.package.as_deref(), &ty.fqn, ty.kind) {
                diags.push(Diagnostic {
                    path: unit.path.clone(),
                    line: ty.line,
                    message: format!("duplicate declaration of `{}` ignored", ty.fqn),
                });
            }
        }
    }
    (dict, diags)
}

/// Result of the second extraction pass.
#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub graph: CdnGraph,
    /// Every resolved reference with its site, canonically sorted.
    pub refs: Vec<SourceRef>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Resolves the references of every unit and assembles the CDN. The node
/// set is exactly the dictionary.
pub fn extract_cdn(units: &[ParsedUnit], dict: &TypeDictionary) -> Extraction {
    let per_unit: Vec<(Vec<SourceRef>, Vec<Diagnostic>)> =
        units.par_iter().map(|u| resolve_unit(u, dict)).collect();

    let mut graph = CdnGraph::new();
    for (name, kind) in dict.entries() {
        graph.add_node(name, kind);
    }
    let mut refs = Vec::new();
    let mut diagnostics = Vec::new();
    for (r, d) in per_unit {
        refs.extend(r);
        diagnostics.extend(d);
    }
    refs.sort();
    diagnostics.sort();
    for r in &refs {
        graph.add_edge(TypedEdge::new(r.from.clone(), r.to.clone(), r.edge_type));
    }
    Extraction {
        graph,
        refs,
        diagnostics,
    }
}

fn resolve_unit(unit: &ParsedUnit, dict: &TypeDictionary) -> (Vec<SourceRef>, Vec<Diagnostic>) {
    let declared: HashMap<&str, &DeclaredType> = unit.types.iter().map(|t| (t.fqn.as_str(), t)).collect();
    let mut ctx = ResolveContext::new(unit.package.as_deref(), unit.imports.clone());
    let mut refs = Vec::new();
    let mut diags = Vec::new();
    let mut notes = Vec::new();

    for raw in &unit.refs {
        if !dict.contains(&raw.from) {
            continue;
        }
        ctx.scope.clear();
        let mut cur = declared.get(raw.from.as_str()).copied();
        while let Some(t) = cur {
            ctx.scope.push(t.fqn.clone());
            cur = t.enclosing.as_deref().and_then(|e| declared.get(e).copied());
        }
        if raw.kind == EdgeType::StaticMethodCall {
            // `field.method()` is an instance call, not a static one.
            let head = raw.name.split('.').next().unwrap_or_default();
            let shadowed = ctx
                .scope
                .iter()
                .filter_map(|s| declared.get(s.as_str()))
                .any(|t| t.fields.iter().any(|f| f == head));
            if shadowed {
                continue;
            }
        }
        let Some(to) = resolve_with_diagnostics(&raw.name, &ctx, dict, &mut notes) else {
            continue;
        };
        for message in notes.drain(..) {
            diags.push(Diagnostic {
                path: unit.path.clone(),
                line: raw.line,
                message,
            });
        }
        if to == raw.from {
            continue;
        }
        refs.push(SourceRef {
            from: raw.from.clone(),
            to,
            edge_type: raw.kind,
            site: Site {
                path: unit.path.clone(),
                line: raw.line,
            },
        });
    }
    (refs, diags)
}

/// Lists `.java` files under `root` in sorted order.
pub fn java_files(root: &Path) -> Result<Vec<PathBuf>, ExtractError> {
    if !root.is_dir() {
        return Err(ExtractError::NotADirectory(root.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| ExtractError::Walk {
            path: root.to_path_buf(),
            message: e.to_string(),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "java") {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

/// Parses files in parallel. Files that cannot be read or parsed are
/// skipped with a diagnostic. Output order follows the input order.
pub fn parse_files(files: &[PathBuf], root: &Path) -> (Vec<ParsedUnit>, Vec<Diagnostic>) {
    let results: Vec<Result<ParsedUnit, Diagnostic>> = files
        .par_iter()
        .map(|path| {
            let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
            let text = fs::read(path).map_err(|e| Diagnostic {
                path: rel.clone(),
                line: 0,
                message: format!("unreadable file skipped: {e}"),
            })?;
            let text = String::from_utf8_lossy(&text);
            parse_source(rel.clone(), &text).map_err(|e| Diagnostic {
                path: rel,
                line: e.line,
                message: format!("syntax error, file skipped: {}", e.message),
            })
        })
        .collect();
    let mut units = Vec::new();
    let mut diags = Vec::new();
    for r in results {
        match r {
            Ok(u) => units.push(u),
            Err(d) => diags.push(d),
        }
    }
    (units, diags)
}

/// Runs both passes over every `.java` file below `root`.
pub fn extract_tree(root: &Path) -> Result<Extraction, ExtractError> {
    let files = java_files(root)?;
    let (units, mut diags) = parse_files(&files, root);
    let (dict, dict_diags) = build_type_dictionary_with_diagnostics(&units);
    let mut extraction = extract_cdn(&units, &dict);
    diags.extend(dict_diags);
    diags.append(&mut extraction.diagnostics);
    diags.sort();
    extraction.diagnostics = diags;
    Ok(extraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE_LISTING: &str = "interface Ifc{
    void f();
}

public class Ac implements Ifc{
    private Cc c;

    public void f(){
        c = new Cc();
    }
}

public class Bc extends Ac{
    public Cc f2(Ifc i, Cc c2){
        i.f();
        return this.c;
    }
}

public class Cc{
//...
}
";

    fn units(files: &[(&str, &str)]) -> Vec<ParsedUnit> {
        files
            .iter()
            .map(|(p, s)| parse_source(*p, s).unwrap())
            .collect()
    }

    #[test]
    fn dictionary_of_sample_listing() {
        let dict = build_type_dictionary(&units(&[("Sample.java", SAMPLE_LISTING)]));
        let got: Vec<(&str, TypeKind)> = dict.entries().collect();
        assert_eq!(
            got,
            vec![
                ("Ac", TypeKind::Class),
                ("Bc", TypeKind::Class),
                ("Cc", TypeKind::Class),
                ("Ifc", TypeKind::Interface),
            ]
        );
    }

    #[test]
    fn empty_input_gives_empty_dictionary() {
        assert!(build_type_dictionary(&[]).is_empty());
    }

    #[test]
    fn same_simple_name_in_two_packages() {
        let dict = build_type_dictionary(&units(&[
            ("p1/A.java", "package p1; class A {}"),
            ("p2/A.java", "package p2; class A {}"),
        ]));
        assert_eq!(dict.len(), 2);
        assert!(dict.contains("p1.A") && dict.contains("p2.A"));
        assert!(dict.package_members("p1").unwrap().contains("A"));
    }

    #[test]
    fn duplicate_declarations_are_reported() {
        let (dict, diags) = build_type_dictionary_with_diagnostics(&units(&[
            ("a/A.java", "package p; class A {}"),
            ("b/A.java", "package p; class A {}"),
        ]));
        assert_eq!(dict.len(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].path, PathBuf::from("b/A.java"));
    }

    #[test]
    fn sample_listing_edges() {
        let u = units(&[("Sample.java", SAMPLE_LISTING)]);
        let dict = build_type_dictionary(&u);
        let ex = extract_cdn(&u, &dict);
        let g = &ex.graph;
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_types("Ac", "Ifc"), [EdgeType::Implements]);
        assert_eq!(
            g.edge_types("Ac", "Cc"),
            [EdgeType::ClassMember, EdgeType::ObjectInstantiation]
        );
        assert_eq!(g.edge_types("Bc", "Ac"), [EdgeType::Extends]);
        assert_eq!(g.edge_types("Bc", "Cc"), [EdgeType::ReturnType, EdgeType::Parameter]);
        assert_eq!(g.edge_types("Bc", "Ifc"), [EdgeType::Parameter]);
        assert_eq!(g.edge_count(), 7);
    }

    #[test]
    fn isolated_class() {
        let u = units(&[("A.java", "class A { String s; void m() { System.out.println(s); } }")]);
        let dict = build_type_dictionary(&u);
        let ex = extract_cdn(&u, &dict);
        assert_eq!(ex.graph.node_count(), 1);
        assert_eq!(ex.graph.edge_count(), 0);
    }

    #[test]
    fn static_method_call_edge() {
        let u = units(&[
            ("A.java", "class A { void m() { B.staticMethod(); } }"),
            ("B.java", "class B { static void staticMethod() {} }"),
        ]);
        let dict = build_type_dictionary(&u);
        let g = extract_cdn(&u, &dict).graph;
        assert_eq!(g.edge_types("A", "B"), [EdgeType::StaticMethodCall]);
    }

    #[test]
    fn field_named_like_a_type_is_not_a_static_call() {
        let u = units(&[
            ("A.java", "class A { Object B; void m() { B.hashCode(); } }"),
            ("B.java", "class B {}"),
        ]);
        let dict = build_type_dictionary(&u);
        assert_eq!(extract_cdn(&u, &dict).graph.edge_count(), 0);
    }

    #[test]
    fn self_references_dropped_and_arrays_kept() {
        let u = units(&[
            ("A.java", "class A { A next; B[] bs; static A make() { return new A(); } }"),
            ("B.java", "class B {}"),
        ]);
        let dict = build_type_dictionary(&u);
        let g = extract_cdn(&u, &dict).graph;
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_types("A", "B"), [EdgeType::ClassMember]);
    }

    #[test]
    fn nested_types_resolve_through_scope() {
        let u = units(&[(
            "p/O.java",
            "package p; class O { static class In { Peer x; } static class Peer {} In y; }",
        )]);
        let dict = build_type_dictionary(&u);
        let g = extract_cdn(&u, &dict).graph;
        assert_eq!(g.edge_types("p.O.In", "p.O.Peer"), [EdgeType::ClassMember]);
        assert_eq!(g.edge_types("p.O", "p.O.In"), [EdgeType::ClassMember]);
    }

    fn dict_of(names: &[&str]) -> TypeDictionary {
        let mut d = TypeDictionary::default();
        for n in names {
            let pkg = n.rsplit_once('.').map(|(p, _)| p);
            d.insert(pkg, n, TypeKind::Class);
        }
        d
    }

    #[test]
    fn resolution_order() {
        let dict = dict_of(&["p1.A", "p2.A", "p3.B", "p4.B", "Cc"]);
        let imp = |p: &str, w: bool| Import {
            path: p.to_string(),
            wildcard: w,
        };

        let ctx = ResolveContext::new(None, vec![]);
        assert_eq!(resolve_type_name("Cc", &ctx, &dict).as_deref(), Some("Cc"));
        assert_eq!(resolve_type_name("String", &ctx, &dict), None);

        let ctx = ResolveContext::new(Some("p1"), vec![imp("p2.A", false)]);
        assert_eq!(resolve_type_name("A", &ctx, &dict).as_deref(), Some("p2.A"));

        let ctx = ResolveContext::new(Some("p1"), vec![imp("p2", true)]);
        assert_eq!(resolve_type_name("A", &ctx, &dict).as_deref(), Some("p1.A"));
        assert_eq!(resolve_type_name("p2.A", &ctx, &dict).as_deref(), Some("p2.A"));

        let ctx = ResolveContext::new(Some("p9"), vec![imp("p4", true), imp("p3", true)]);
        let mut notes = Vec::new();
        assert_eq!(
            resolve_with_diagnostics("B", &ctx, &dict, &mut notes).as_deref(),
            Some("p4.B")
        );
        assert_eq!(notes.len(), 1);

        // A single-type import of an external class shadows the package.
        let ctx = ResolveContext::new(Some("p1"), vec![imp("java.util.A", false)]);
        assert_eq!(resolve_type_name("A", &ctx, &dict), None);
    }
}
