//! Structural parser for the supported Java subset.
//!
//! The parser does not build a full syntax tree. It walks declarations
//! (package, imports, types, members) precisely and scans method bodies and
//! initializers for the three body-level relations: local variable types,
//! `new` expressions and `Type.method(...)` calls. Every type use it finds
//! becomes a [`RawRef`] holding the name as written; resolution against the
//! type dictionary happens later.

use std::collections::HashSet;
use std::path::PathBuf;

use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;
use crate::graph::{EdgeType, TypeKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    /// Dotted path without the trailing `.*`.
    pub path: String,
    pub wildcard: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclaredType {
    pub fqn: String,
    pub kind: TypeKind,
    pub line: usize,
    /// Fully-qualified name of the enclosing type for nested declarations.
    pub enclosing: Option<String>,
    /// Names of fields declared directly in this type.
    pub fields: Vec<String>,
}

/// An unresolved type use inside a declared type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRef {
    /// Fully-qualified name of the declaring type the use belongs to.
    pub from: String,
    /// Type name as written, generic arguments and array dimensions removed.
    pub name: String,
    pub kind: EdgeType,
    pub line: usize,
}

/// One parsed compilation unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedUnit {
    pub path: PathBuf,
    pub package: Option<String>,
    pub imports: Vec<Import>,
    pub types: Vec<DeclaredType>,
    pub refs: Vec<RawRef>,
}

pub fn parse_source(path: impl Into<PathBuf>, src: &str) -> Result<ParsedUnit, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        package: None,
        types: Vec::new(),
        refs: Vec::new(),
    };
    let imports = p.compilation_unit()?;
    Ok(ParsedUnit {
        path: path.into(),
        package: p.package,
        imports,
        types: p.types,
        refs: p.refs,
    })
}

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "abstract",
    "final",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "break", "case", "catch", "class", "const", "continue", "default", "do",
    "else", "enum", "extends", "final", "finally", "for", "goto", "if", "implements", "import",
    "instanceof", "interface", "native", "new", "package", "private", "protected", "public",
    "return", "static", "strictfp", "super", "switch", "synchronized", "this", "throw", "throws",
    "transient", "try", "volatile", "while", "true", "false", "null", "yield",
];

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void", "var",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// A parsed type use. `name` is `None` for primitives, `void` and `var`.
#[derive(Debug, Clone)]
struct TypeUse {
    name: Option<String>,
    line: usize,
}

#[derive(Debug, Default)]
struct Modifiers {
    is_static: bool,
    annotations: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScanMode {
    /// From `{` through the matching `}`.
    Block,
    /// Up to a top-level `,`, `;` or an unbalanced closer.
    Initializer,
    /// Up to an unbalanced `)`.
    Arguments,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    package: Option<String>,
    types: Vec<DeclaredType>,
    refs: Vec<RawRef>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + off)
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn at_ident(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_ident(s))
    }

    fn line(&self) -> usize {
        self.peek()
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    fn err(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line(),
            message: message.into(),
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), SyntaxError> {
        if self.at_punct(p) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`, found {}", self.describe())))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, usize), SyntaxError> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                line,
            }) => {
                self.bump();
                Ok((s.clone(), *line))
            }
            _ => Err(self.err(format!("expected identifier, found {}", self.describe()))),
        }
    }

    fn describe(&self) -> String {
        match self.peek().map(|t| &t.kind) {
            None => "end of file".to_string(),
            Some(TokenKind::Ident(s)) => format!("`{s}`"),
            Some(TokenKind::Literal) => "literal".to_string(),
            Some(TokenKind::Punct(p)) => format!("`{p}`"),
        }
    }

    fn push_ref(&mut self, owner: usize, name: &str, kind: EdgeType, line: usize) {
        self.refs.push(RawRef {
            from: self.types[owner].fqn.clone(),
            name: name.to_string(),
            kind,
            line,
        });
    }

    fn push_type_ref(&mut self, owner: usize, ty: &TypeUse, kind: EdgeType) {
        if let Some(name) = &ty.name {
            self.push_ref(owner, name, kind, ty.line);
        }
    }

    fn push_annotations(&mut self, owner: usize, mods: &Modifiers) {
        for (name, line) in &mods.annotations {
            self.push_ref(owner, name, EdgeType::Annotation, *line);
        }
    }

    fn compilation_unit(&mut self) -> Result<Vec<Import>, SyntaxError> {
        let mut imports = Vec::new();
        let mut mods = self.modifiers()?;
        if self.at_ident("package") {
            self.bump();
            self.package = Some(self.qualified_name()?);
            self.expect_punct(";")?;
            mods = Modifiers::default();
        }
        while self.at_ident("import") {
            self.bump();
            let is_static = self.at_ident("static");
            if is_static {
                self.bump();
            }
            let path = self.qualified_name()?;
            let wildcard = self.at_punct(".") && self.peek_at(1).is_some_and(|t| t.is_punct("*"));
            if wildcard {
                self.pos += 2;
            }
            self.expect_punct(";")?;
            // Static imports bring in members, not types.
            if !is_static {
                imports.push(Import { path, wildcard });
            }
        }
        loop {
            while self.at_punct(";") {
                self.bump();
            }
            if self.peek().is_none() {
                break;
            }
            if !mods.annotations.is_empty() || mods.is_static {
                let m = std::mem::take(&mut mods);
                self.type_decl(None, m)?;
                continue;
            }
            let m = self.modifiers()?;
            if !self.at_type_keyword() {
                return Err(self.err(format!("expected type declaration, found {}", self.describe())));
            }
            self.type_decl(None, m)?;
        }
        Ok(imports)
    }

    fn qualified_name(&mut self) -> Result<String, SyntaxError> {
        let (mut name, _) = self.expect_ident()?;
        while self.at_punct(".") && matches!(self.peek_at(1).map(|t| &t.kind), Some(TokenKind::Ident(_))) {
            self.bump();
            let (seg, _) = self.expect_ident()?;
            name.push('.');
            name.push_str(&seg);
        }
        Ok(name)
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> Result<(), SyntaxError> {
        let start = self.line();
        self.expect_punct(open)?;
        let mut depth = 1;
        while depth > 0 {
            match self.peek() {
                None => {
                    return Err(SyntaxError {
                        line: start,
                        message: format!("unbalanced `{open}`"),
                    })
                }
                Some(t) if t.is_punct(open) => depth += 1,
                Some(t) if t.is_punct(close) => depth -= 1,
                _ => {}
            }
            self.bump();
        }
        Ok(())
    }

    fn annotation(&mut self) -> Result<(String, usize), SyntaxError> {
        let line = self.line();
        self.expect_punct("@")?;
        let name = self.qualified_name()?;
        if self.at_punct("(") {
            self.skip_balanced("(", ")")?;
        }
        Ok((name, line))
    }

    fn at_annotation_use(&self) -> bool {
        self.at_punct("@") && !self.peek_at(1).is_some_and(|t| t.is_ident("interface"))
    }

    fn modifiers(&mut self) -> Result<Modifiers, SyntaxError> {
        let mut mods = Modifiers::default();
        loop {
            if self.at_annotation_use() {
                let a = self.annotation()?;
                mods.annotations.push(a);
                continue;
            }
            match self.peek().and_then(Token::ident) {
                Some("static") => {
                    mods.is_static = true;
                    self.bump();
                }
                Some(m) if MODIFIERS.contains(&m) => {
                    // `default:` inside a switch never reaches here; a member
                    // named `default` is not legal Java.
                    self.bump();
                }
                Some("non")
                    if self.peek_at(1).is_some_and(|t| t.is_punct("-"))
                        && self.peek_at(2).is_some_and(|t| t.is_ident("sealed")) =>
                {
                    self.pos += 3;
                }
                _ => return Ok(mods),
            }
        }
    }

    fn at_type_keyword(&self) -> bool {
        match self.peek().and_then(Token::ident) {
            Some("class" | "interface" | "enum") => true,
            Some("record") => {
                matches!(self.peek_at(1).map(|t| &t.kind), Some(TokenKind::Ident(_)))
                    && self
                        .peek_at(2)
                        .is_some_and(|t| t.is_punct("(") || t.is_punct("<"))
            }
            _ => {
                self.at_punct("@") && self.peek_at(1).is_some_and(|t| t.is_ident("interface"))
            }
        }
    }

    fn type_decl(&mut self, outer: Option<usize>, mods: Modifiers) -> Result<(), SyntaxError> {
        let (kind, is_record) = if self.at_punct("@") {
            self.pos += 2;
            (TypeKind::Annotation, false)
        } else {
            let (kw, _) = self.expect_ident()?;
            match kw.as_str() {
                "class" => (TypeKind::Class, false),
                "interface" => (TypeKind::Interface, false),
                "enum" => (TypeKind::Enum, false),
                "record" => (TypeKind::Class, true),
                other => return Err(self.err(format!("expected type declaration, found `{other}`"))),
            }
        };
        let (name, line) = self.expect_ident()?;
        let fqn = match outer {
            Some(o) => format!("{}.{}", self.types[o].fqn, name),
            None => match &self.package {
                Some(p) => format!("{p}.{name}"),
                None => name.clone(),
            },
        };
        let enclosing = outer.map(|o| self.types[o].fqn.clone());
        let idx = self.types.len();
        self.types.push(DeclaredType {
            fqn,
            kind,
            line,
            enclosing,
            fields: Vec::new(),
        });
        self.push_annotations(idx, &mods);

        if self.at_punct("<") && !self.skip_type_args() {
            return Err(self.err("malformed type parameters"));
        }
        if is_record {
            self.record_components(idx)?;
        }
        loop {
            match self.peek().and_then(Token::ident) {
                Some("extends") => {
                    self.bump();
                    self.type_list(idx, Some(EdgeType::Extends))?;
                }
                Some("implements") => {
                    self.bump();
                    self.type_list(idx, Some(EdgeType::Implements))?;
                }
                Some("permits") => {
                    self.bump();
                    self.type_list(idx, None)?;
                }
                _ => break,
            }
        }
        self.class_body(idx, &name, kind, is_record)
    }

    fn record_components(&mut self, owner: usize) -> Result<(), SyntaxError> {
        self.expect_punct("(")?;
        while !self.at_punct(")") {
            let mods = self.modifiers()?;
            self.push_annotations(owner, &mods);
            let ty = self.parse_type().ok_or_else(|| self.err("expected record component type"))?;
            if self.at_punct("...") {
                self.bump();
            }
            let (name, _) = self.expect_ident()?;
            self.push_type_ref(owner, &ty, EdgeType::ClassMember);
            self.types[owner].fields.push(name);
            if self.at_punct(",") {
                self.bump();
            } else if !self.at_punct(")") {
                return Err(self.err(format!("expected `,` or `)`, found {}", self.describe())));
            }
        }
        self.bump();
        Ok(())
    }

    fn type_list(&mut self, owner: usize, kind: Option<EdgeType>) -> Result<(), SyntaxError> {
        loop {
            let ty = self.parse_type().ok_or_else(|| self.err("expected type"))?;
            if let Some(kind) = kind {
                self.push_type_ref(owner, &ty, kind);
            }
            if self.at_punct(",") {
                self.bump();
            } else {
                return Ok(());
            }
        }
    }

    fn class_body(
        &mut self,
        owner: usize,
        simple: &str,
        kind: TypeKind,
        is_record: bool,
    ) -> Result<(), SyntaxError> {
        self.expect_punct("{")?;
        if kind == TypeKind::Enum {
            self.enum_constants(owner)?;
        }
        loop {
            match self.peek() {
                None => return Err(self.err("unexpected end of file in type body")),
                Some(t) if t.is_punct("}") => {
                    self.bump();
                    return Ok(());
                }
                Some(t) if t.is_punct(";") => {
                    self.bump();
                    continue;
                }
                Some(t) if t.is_punct("{") => {
                    self.scan(owner, &mut HashSet::new(), ScanMode::Block)?;
                    continue;
                }
                Some(t) if t.is_ident("static") && self.peek_at(1).is_some_and(|n| n.is_punct("{")) => {
                    self.bump();
                    self.scan(owner, &mut HashSet::new(), ScanMode::Block)?;
                    continue;
                }
                _ => {}
            }
            let mods = self.modifiers()?;
            if self.at_type_keyword() {
                self.type_decl(Some(owner), mods)?;
                continue;
            }
            self.push_annotations(owner, &mods);
            if self.at_punct("<") && !self.skip_type_args() {
                return Err(self.err("malformed type parameters"));
            }
            if !simple.is_empty() && self.at_ident(simple) {
                if self.peek_at(1).is_some_and(|t| t.is_punct("(")) {
                    self.bump();
                    self.method_rest(owner, None)?;
                    continue;
                }
                if is_record && self.peek_at(1).is_some_and(|t| t.is_punct("{")) {
                    self.bump();
                    self.scan(owner, &mut HashSet::new(), ScanMode::Block)?;
                    continue;
                }
            }
            let ty = self
                .parse_type()
                .ok_or_else(|| self.err(format!("expected member declaration, found {}", self.describe())))?;
            let (name, _) = self.expect_ident()?;
            if self.at_punct("(") {
                self.method_rest(owner, Some(ty))?;
            } else {
                self.field_rest(owner, ty, name, mods.is_static)?;
            }
        }
    }

    fn enum_constants(&mut self, owner: usize) -> Result<(), SyntaxError> {
        loop {
            if self.at_punct(";") {
                self.bump();
                return Ok(());
            }
            if self.at_punct("}") {
                return Ok(());
            }
            let mods = self.modifiers()?;
            self.push_annotations(owner, &mods);
            self.expect_ident()?;
            if self.at_punct("(") {
                self.bump();
                self.scan(owner, &mut HashSet::new(), ScanMode::Arguments)?;
                self.expect_punct(")")?;
            }
            if self.at_punct("{") {
                // Constant-specific body: an anonymous subclass whose
                // references belong to the enum itself.
                self.class_body(owner, "", TypeKind::Class, false)?;
            }
            if self.at_punct(",") {
                self.bump();
            } else if !self.at_punct(";") && !self.at_punct("}") {
                return Err(self.err(format!("expected enum constant separator, found {}", self.describe())));
            }
        }
    }

    fn method_rest(&mut self, owner: usize, ret: Option<TypeUse>) -> Result<(), SyntaxError> {
        if let Some(ret) = &ret {
            self.push_type_ref(owner, ret, EdgeType::ReturnType);
        }
        let mut locals = HashSet::new();
        self.expect_punct("(")?;
        while !self.at_punct(")") {
            let mods = self.modifiers()?;
            self.push_annotations(owner, &mods);
            let ty = self.parse_type().ok_or_else(|| self.err("expected parameter type"))?;
            if self.at_punct("...") {
                self.bump();
            }
            let name = if self.at_ident("this") {
                self.bump();
                None
            } else {
                Some(self.expect_ident()?.0)
            };
            while self.at_punct("[") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
                self.pos += 2;
            }
            if let Some(name) = name {
                self.push_type_ref(owner, &ty, EdgeType::Parameter);
                locals.insert(name);
            }
            if self.at_punct(",") {
                self.bump();
            } else if !self.at_punct(")") {
                return Err(self.err(format!("expected `,` or `)`, found {}", self.describe())));
            }
        }
        self.bump();
        while self.at_punct("[") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
            self.pos += 2;
        }
        if self.at_ident("throws") {
            self.bump();
            self.type_list(owner, None)?;
        }
        if self.at_ident("default") {
            // Annotation element default value.
            self.bump();
            self.scan(owner, &mut HashSet::new(), ScanMode::Initializer)?;
        }
        if self.at_punct("{") {
            self.scan(owner, &mut locals, ScanMode::Block)
        } else {
            self.expect_punct(";")
        }
    }

    fn field_rest(&mut self, owner: usize, ty: TypeUse, first: String, is_static: bool) -> Result<(), SyntaxError> {
        let kind = if is_static {
            EdgeType::StaticClassMember
        } else {
            EdgeType::ClassMember
        };
        self.push_type_ref(owner, &ty, kind);
        let mut name = first;
        loop {
            self.types[owner].fields.push(name);
            while self.at_punct("[") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
                self.pos += 2;
            }
            if self.at_punct("=") {
                self.bump();
                self.scan(owner, &mut HashSet::new(), ScanMode::Initializer)?;
            }
            if self.at_punct(",") {
                self.bump();
                name = self.expect_ident()?.0;
            } else {
                return self.expect_punct(";");
            }
        }
    }

    /// Skips a generic argument or parameter list starting at `<`. Restores
    /// the position and returns false when the tokens cannot form one.
    fn skip_type_args(&mut self) -> bool {
        let save = self.pos;
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            match &t.kind {
                TokenKind::Punct("<") => depth += 1,
                TokenKind::Punct(">") => {
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return true;
                    }
                }
                TokenKind::Ident(_) => {}
                TokenKind::Punct("." | "," | "?" | "&" | "[" | "]" | "@") => {}
                _ => break,
            }
            self.bump();
        }
        self.pos = save;
        false
    }

    /// Parses a type use; restores the position and returns `None` when the
    /// tokens do not form one.
    fn parse_type(&mut self) -> Option<TypeUse> {
        let save = self.pos;
        let res = self.parse_type_inner();
        if res.is_none() {
            self.pos = save;
        }
        res
    }

    fn parse_type_inner(&mut self) -> Option<TypeUse> {
        while self.at_annotation_use() {
            self.annotation().ok()?;
        }
        let tok = self.peek()?;
        let first = tok.ident()?;
        if is_keyword(first) {
            return None;
        }
        let line = tok.line;
        self.bump();
        let name = if PRIMITIVES.contains(&first) {
            None
        } else {
            let mut name = first.to_string();
            loop {
                if self.at_punct("<") && !self.skip_type_args() {
                    return None;
                }
                let next_is_segment = self.at_punct(".")
                    && self
                        .peek_at(1)
                        .and_then(Token::ident)
                        .is_some_and(|s| !is_keyword(s));
                if !next_is_segment {
                    break;
                }
                self.bump();
                let seg = self.peek()?.ident()?.to_string();
                self.bump();
                name.push('.');
                name.push_str(&seg);
            }
            Some(name)
        };
        while self.at_punct("[") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
            self.pos += 2;
        }
        Some(TypeUse { name, line })
    }

    /// Recognizes `[final] [@Ann] Type name (= | ; | , | : | ) | [)` at a
    /// statement start and records a variable reference.
    fn try_local_decl(&mut self, owner: usize, locals: &mut HashSet<String>) -> bool {
        let save = self.pos;
        let mut annotations = Vec::new();
        loop {
            if self.at_ident("final") {
                self.bump();
            } else if self.at_annotation_use() {
                match self.annotation() {
                    Ok(a) => annotations.push(a),
                    Err(_) => {
                        self.pos = save;
                        return false;
                    }
                }
            } else {
                break;
            }
        }
        let mut types = Vec::new();
        loop {
            match self.parse_type() {
                Some(t) => types.push(t),
                None => {
                    self.pos = save;
                    return false;
                }
            }
            // Multi-catch alternatives.
            if self.at_punct("|") {
                self.bump();
            } else {
                break;
            }
        }
        let name = match self.peek().and_then(Token::ident) {
            Some(n) if !is_keyword(n) => n.to_string(),
            _ => {
                self.pos = save;
                return false;
            }
        };
        let terminated = self
            .peek_at(1)
            .is_some_and(|t| ["=", ";", ",", ":", ")", "["].iter().any(|p| t.is_punct(p)));
        if !terminated {
            self.pos = save;
            return false;
        }
        self.bump();
        for (ann, line) in annotations {
            self.push_ref(owner, &ann, EdgeType::Annotation, line);
        }
        for ty in &types {
            self.push_type_ref(owner, ty, EdgeType::Variable);
        }
        locals.insert(name);
        true
    }

    /// Scans code for variable declarations, instantiations, static calls
    /// and annotation uses.
    fn scan(&mut self, owner: usize, locals: &mut HashSet<String>, mode: ScanMode) -> Result<(), SyntaxError> {
        let start = self.line();
        let mut depth = 0i32;
        let mut stmt_start = false;
        if mode == ScanMode::Block {
            self.expect_punct("{")?;
            depth = 1;
            stmt_start = true;
        }
        loop {
            if mode == ScanMode::Block && depth == 0 {
                return Ok(());
            }
            let Some(tok) = self.peek() else {
                return Err(SyntaxError {
                    line: start,
                    message: "unexpected end of file in code block".to_string(),
                });
            };
            if mode != ScanMode::Block && depth == 0 {
                let stop = match mode {
                    ScanMode::Initializer => [";", ",", ")", "}"].iter().any(|p| tok.is_punct(p)),
                    _ => tok.is_punct(")"),
                };
                if stop {
                    return Ok(());
                }
            }
            if stmt_start && self.try_local_decl(owner, locals) {
                stmt_start = false;
                continue;
            }
            stmt_start = false;
            match &tok.kind {
                TokenKind::Punct(p @ ("{" | "(" | "[")) => {
                    depth += 1;
                    stmt_start = *p == "{";
                    self.bump();
                }
                TokenKind::Punct(p @ ("}" | ")" | "]")) => {
                    depth -= 1;
                    stmt_start = *p == "}";
                    self.bump();
                }
                TokenKind::Punct(";" | ":") => {
                    stmt_start = true;
                    self.bump();
                }
                TokenKind::Punct("@") => {
                    if self.peek_at(1).is_some_and(|t| t.ident().is_some()) {
                        let (name, line) = self.annotation()?;
                        self.push_ref(owner, &name, EdgeType::Annotation, line);
                    } else {
                        self.bump();
                    }
                }
                TokenKind::Ident(id) if matches!(id.as_str(), "for" | "try" | "catch") => {
                    self.bump();
                    if self.at_punct("(") {
                        depth += 1;
                        self.bump();
                        stmt_start = true;
                    }
                }
                TokenKind::Ident(id) if id == "new" => {
                    self.bump();
                    self.instantiation(owner);
                }
                TokenKind::Ident(_) => self.maybe_static_call(owner, locals),
                _ => self.bump(),
            }
        }
    }

    fn instantiation(&mut self, owner: usize) {
        while self.at_annotation_use() {
            if self.annotation().is_err() {
                return;
            }
        }
        let Some(tok) = self.peek() else { return };
        let Some(first) = tok.ident() else { return };
        if PRIMITIVES.contains(&first) || is_keyword(first) {
            return;
        }
        let line = tok.line;
        let mut name = first.to_string();
        self.bump();
        loop {
            if self.at_punct("<") && !self.skip_type_args() {
                break;
            }
            if self.at_punct(".") {
                if let Some(seg) = self.peek_at(1).and_then(Token::ident) {
                    name.push('.');
                    name.push_str(seg);
                    self.pos += 2;
                    continue;
                }
            }
            break;
        }
        self.push_ref(owner, &name, EdgeType::ObjectInstantiation, line);
    }

    /// At an identifier: records `Name.method(` (or `a.b.Name.method(`)
    /// when the chain head is not a local variable.
    fn maybe_static_call(&mut self, owner: usize, locals: &HashSet<String>) {
        let after_dot = self.pos > 0
            && matches!(
                self.toks[self.pos - 1].kind,
                TokenKind::Punct("." | "::" | "@")
            );
        let head = self.peek().and_then(Token::ident).unwrap_or_default();
        if after_dot || is_keyword(head) || locals.contains(head) {
            self.bump();
            return;
        }
        let mut segments = vec![head];
        let mut j = self.pos;
        while self.toks.get(j + 1).is_some_and(|t| t.is_punct(".")) {
            match self.toks.get(j + 2).and_then(Token::ident) {
                Some(s) => {
                    segments.push(s);
                    j += 2;
                }
                None => break,
            }
        }
        let is_call = self.toks.get(j + 1).is_some_and(|t| t.is_punct("("));
        if is_call && segments.len() >= 2 {
            let qualifier = segments[..segments.len() - 1].join(".");
            let line = self.toks[self.pos].line;
            self.push_ref(owner, &qualifier, EdgeType::StaticMethodCall, line);
            self.pos = j + 1;
        } else {
            self.bump();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn refs(src: &str) -> Vec<(String, String, EdgeType)> {
        let unit = parse_source("T.java", src).unwrap();
        unit.refs
            .into_iter()
            .map(|r| (r.from, r.name, r.kind))
            .collect()
    }

    fn has(refs: &[(String, String, EdgeType)], from: &str, name: &str, kind: EdgeType) -> bool {
        refs.iter().any(|r| r.0 == from && r.1 == name && r.2 == kind)
    }

    #[test]
    fn declarations_and_nesting() {
        let unit = parse_source(
            "A.java",
            "package p.q; import java.util.*; import p.r.B; import static p.r.C.f;\n\
             public class A { static class In {} interface J {} enum E { X, Y } @interface Ann {} }\n\
             record R(int x) {}",
        )
        .unwrap();
        assert_eq!(unit.package.as_deref(), Some("p.q"));
        assert_eq!(
            unit.imports,
            vec![
                Import { path: "java.util".into(), wildcard: true },
                Import { path: "p.r.B".into(), wildcard: false },
            ]
        );
        let names: Vec<(&str, TypeKind)> = unit.types.iter().map(|t| (t.fqn.as_str(), t.kind)).collect();
        assert_eq!(
            names,
            vec![
                ("p.q.A", TypeKind::Class),
                ("p.q.A.In", TypeKind::Class),
                ("p.q.A.J", TypeKind::Interface),
                ("p.q.A.E", TypeKind::Enum),
                ("p.q.A.Ann", TypeKind::Annotation),
                ("p.q.R", TypeKind::Class),
            ]
        );
        assert_eq!(unit.types[1].enclosing.as_deref(), Some("p.q.A"));
    }

    #[test]
    fn member_relations() {
        let r = refs(
            "@Marker class A extends B implements I, J<K> {\n\
               private C c; static D d = new D(); E[] es, more;\n\
               @Tx public F m(G g, H... hs) throws X { return null; }\n\
               A(@Nn L l) {}\n\
             }",
        );
        assert!(has(&r, "A", "Marker", EdgeType::Annotation));
        assert!(has(&r, "A", "B", EdgeType::Extends));
        assert!(has(&r, "A", "I", EdgeType::Implements));
        assert!(has(&r, "A", "J", EdgeType::Implements));
        assert!(!r.iter().any(|x| x.1 == "K"), "generic arguments are erased");
        assert!(has(&r, "A", "C", EdgeType::ClassMember));
        assert!(has(&r, "A", "D", EdgeType::StaticClassMember));
        assert!(has(&r, "A", "D", EdgeType::ObjectInstantiation));
        assert!(has(&r, "A", "E", EdgeType::ClassMember));
        assert!(has(&r, "A", "Tx", EdgeType::Annotation));
        assert!(has(&r, "A", "F", EdgeType::ReturnType));
        assert!(has(&r, "A", "G", EdgeType::Parameter));
        assert!(has(&r, "A", "H", EdgeType::Parameter));
        assert!(has(&r, "A", "L", EdgeType::Parameter));
        assert!(has(&r, "A", "Nn", EdgeType::Annotation));
        assert!(!r.iter().any(|x| x.1 == "X"), "throws clauses carry no relation");
    }

    #[test]
    fn body_relations() {
        let r = refs(
            "class A { void m(Q q) {\n\
               Foo f = new Bar<Baz>(); List<Foo> xs; int i = 0;\n\
               for (Item it : items) { Util.run(it); }\n\
               try (Res r = open()) {} catch (E1 | E2 e) {}\n\
               q.call(); f.go(); Helper.Nested.make(); this.x(); a.b = c;\n\
               if (i < n && j > k) {}\n\
             } }",
        );
        assert!(has(&r, "A", "Foo", EdgeType::Variable));
        assert!(has(&r, "A", "Bar", EdgeType::ObjectInstantiation));
        assert!(!r.iter().any(|x| x.1 == "Baz"));
        assert!(has(&r, "A", "List", EdgeType::Variable));
        assert!(has(&r, "A", "Item", EdgeType::Variable));
        assert!(has(&r, "A", "Util", EdgeType::StaticMethodCall));
        assert!(has(&r, "A", "Res", EdgeType::Variable));
        assert!(has(&r, "A", "E1", EdgeType::Variable));
        assert!(has(&r, "A", "E2", EdgeType::Variable));
        assert!(has(&r, "A", "Helper.Nested", EdgeType::StaticMethodCall));
        let smc: Vec<&str> = r
            .iter()
            .filter(|x| x.2 == EdgeType::StaticMethodCall)
            .map(|x| x.1.as_str())
            .collect();
        assert!(!smc.contains(&"q") && !smc.contains(&"f") && !smc.contains(&"it"), "{smc:?}");
    }

    #[test]
    fn enum_and_anonymous_bodies() {
        let r = refs(
            "enum E implements I { A(new X()), B { Y m() { return null; } }; private Z z; }\n\
             class C { Runnable r = new Runnable() { public void run() { W w; } }; }",
        );
        assert!(has(&r, "E", "I", EdgeType::Implements));
        assert!(has(&r, "E", "X", EdgeType::ObjectInstantiation));
        assert!(has(&r, "E", "Y", EdgeType::ReturnType));
        assert!(has(&r, "E", "Z", EdgeType::ClassMember));
        assert!(has(&r, "C", "Runnable", EdgeType::ObjectInstantiation));
        assert!(has(&r, "C", "W", EdgeType::Variable));
    }

    #[test]
    fn interface_members_and_generic_methods() {
        let r = refs(
            "interface I extends J { int X = 1; <T extends K> T get(Class<T> c); default M m() { return null; } }\n\
             @interface Ann { String value() default \"\"; N[] others() default {}; }",
        );
        assert!(has(&r, "I", "J", EdgeType::Extends));
        assert!(has(&r, "I", "Class", EdgeType::Parameter));
        assert!(has(&r, "I", "M", EdgeType::ReturnType));
        assert!(!r.iter().any(|x| x.1 == "K"));
        assert!(has(&r, "Ann", "N", EdgeType::ReturnType));
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(parse_source("x", "class A { void m() { ").is_err());
        assert!(parse_source("x", "class { }").is_err());
        assert!(parse_source("x", "module m { requires x; }").is_err());
        assert!(parse_source("x", "class A { int x = ; } }").is_err());
    }
}
