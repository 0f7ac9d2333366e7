//! Thin layer over the tree-sitter Java grammar.
//!
//! Everything that needs to look at Java source (corpus mapping, code
//! extraction, test placement, smell detection) goes through [`JavaSource`],
//! which owns both the text and its syntax tree.

use std::cell::RefCell;
use std::fmt;

use tree_sitter::{Node, Parser, Tree};

thread_local! {
    static PARSER: RefCell<Parser> = RefCell::new({
        let mut parser = Parser::new();
        parser
            .set_language(&tree_sitter_java::LANGUAGE.into())
            .expect("bundled Java grammar is ABI compatible");
        parser
    });
}

/// 1-based line/column of a syntax problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("Java syntax error at {position}")]
pub struct SyntaxError {
    pub position: Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub kind: TypeKind,
    pub name: String,
}

pub struct JavaSource {
    text: String,
    tree: Tree,
}

impl fmt::Debug for JavaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JavaSource")
            .field("len", &self.text.len())
            .field("has_errors", &self.has_errors())
            .finish()
    }
}

impl JavaSource {
    /// Error-tolerant parse. The tree may contain ERROR/MISSING nodes.
    pub fn parse(text: impl Into<String>) -> Self {
        let text = text.into();
        let tree = PARSER
            .with(|p| p.borrow_mut().parse(&text, None))
            .expect("parser has a language and no timeout");
        Self { text, tree }
    }

    /// Parse and reject anything that is not a clean compilation unit.
    pub fn parse_strict(text: impl Into<String>) -> Result<Self, SyntaxError> {
        let source = Self::parse(text);
        match source.first_error() {
            Some(position) => Err(SyntaxError { position }),
            None => Ok(source),
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    pub fn text_of(&self, node: Node<'_>) -> &str {
        &self.text[node.byte_range()]
    }

    pub fn has_errors(&self) -> bool {
        self.root().has_error()
    }

    pub fn first_error(&self) -> Option<Position> {
        let root = self.root();
        if !root.has_error() {
            return None;
        }
        let mut found = None;
        visit(root, &mut |node| {
            if found.is_none() && (node.is_error() || node.is_missing()) {
                let p = node.start_position();
                found = Some(Position {
                    line: p.row + 1,
                    column: p.column + 1,
                });
            }
            found.is_none() && node.has_error()
        });
        // has_error() can be set without a visible ERROR child in rare cases.
        Some(found.unwrap_or(Position { line: 1, column: 1 }))
    }

    /// Declared package, e.g. `com.example.util`.
    pub fn package(&self) -> Option<String> {
        let root = self.root();
        let mut cursor = root.walk();
        let decl = root
            .named_children(&mut cursor)
            .find(|n| n.kind() == "package_declaration")?;
        let mut inner = decl.walk();
        let name = decl
            .named_children(&mut inner)
            .find(|n| matches!(n.kind(), "scoped_identifier" | "identifier"))?;
        Some(strip_whitespace(self.text_of(name)))
    }

    /// Byte range of the package declaration, if any.
    pub fn package_range(&self) -> Option<std::ops::Range<usize>> {
        let root = self.root();
        let mut cursor = root.walk();
        let decl = root
            .named_children(&mut cursor)
            .find(|n| n.kind() == "package_declaration");
        decl.map(|n| n.byte_range())
    }

    pub fn top_level_types(&self) -> Vec<TypeDecl> {
        self.top_level_type_nodes()
            .into_iter()
            .filter_map(|node| {
                let kind = type_kind(node.kind())?;
                let name = node.child_by_field_name("name")?;
                Some(TypeDecl {
                    kind,
                    name: self.text_of(name).to_string(),
                })
            })
            .collect()
    }

    pub fn top_level_type_nodes(&self) -> Vec<Node<'_>> {
        let root = self.root();
        let mut cursor = root.walk();
        root.named_children(&mut cursor)
            .filter(|n| type_kind(n.kind()).is_some())
            .collect()
    }

    /// Names of methods declared directly in the body of the first top-level
    /// type called `type_name` (or the first top-level type when `None`).
    pub fn declared_methods(&self, type_name: Option<&str>) -> Vec<String> {
        let Some(decl) = self.top_level_type_nodes().into_iter().find(|n| match type_name {
            Some(wanted) => n
                .child_by_field_name("name")
                .is_some_and(|name| self.text_of(name) == wanted),
            None => true,
        }) else {
            return Vec::new();
        };
        let Some(body) = decl.child_by_field_name("body") else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut cursor = body.walk();
        for member in body.named_children(&mut cursor) {
            if member.kind() == "method_declaration" {
                if let Some(name) = member.child_by_field_name("name") {
                    out.push(self.text_of(name).to_string());
                }
            }
        }
        // Record components are accessor methods.
        if decl.kind() == "record_declaration" {
            if let Some(params) = decl.child_by_field_name("parameters") {
                let mut c = params.walk();
                for p in params.named_children(&mut c) {
                    if let Some(name) = p.child_by_field_name("name") {
                        out.push(self.text_of(name).to_string());
                    }
                }
            }
        }
        out
    }

    /// Cyclomatic complexity of every method, constructor and compact
    /// constructor that has a body: 1 + decision points inside it.
    pub fn method_complexities(&self) -> Vec<(String, u32)> {
        let mut out = Vec::new();
        visit(self.root(), &mut |node| {
            if is_callable(node.kind()) {
                if let Some(body) = node.child_by_field_name("body") {
                    let name = node
                        .child_by_field_name("name")
                        .map(|n| self.text_of(n).to_string())
                        .unwrap_or_default();
                    out.push((name, 1 + decision_points(body)));
                }
            }
            true
        });
        out
    }

    pub fn cyclomatic_total(&self) -> u64 {
        self.method_complexities()
            .iter()
            .map(|(_, cc)| u64::from(*cc))
            .sum()
    }
}

fn is_callable(kind: &str) -> bool {
    matches!(
        kind,
        "method_declaration" | "constructor_declaration" | "compact_constructor_declaration"
    )
}

fn type_kind(kind: &str) -> Option<TypeKind> {
    Some(match kind {
        "class_declaration" => TypeKind::Class,
        "interface_declaration" => TypeKind::Interface,
        "enum_declaration" => TypeKind::Enum,
        "record_declaration" => TypeKind::Record,
        "annotation_type_declaration" => TypeKind::Annotation,
        _ => return None,
    })
}

/// Decision points in `node`'s subtree, not descending into nested
/// methods (those are counted on their own).
fn decision_points(node: Node<'_>) -> u32 {
    let mut count = 0;
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        if is_callable(child.kind()) {
            continue;
        }
        if is_decision_point(child) {
            count += 1;
        }
        count += decision_points(child);
    }
    count
}

fn is_decision_point(node: Node<'_>) -> bool {
    match node.kind() {
        "if_statement" | "for_statement" | "enhanced_for_statement" | "while_statement"
        | "do_statement" | "catch_clause" | "ternary_expression" => true,
        // `default` labels carry no expression child.
        "switch_label" => node.named_child_count() > 0,
        "binary_expression" => node
            .child_by_field_name("operator")
            .is_some_and(|op| matches!(op.kind(), "&&" | "||")),
        _ => false,
    }
}

/// Pre-order walk; the callback returns whether to descend.
pub fn visit<'t>(node: Node<'t>, f: &mut impl FnMut(Node<'t>) -> bool) {
    if !f(node) {
        return;
    }
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        visit(child, f);
    }
}

/// Remove whitespace outside string and char literals.
pub fn strip_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for c in text.chars() {
        match quote {
            Some(q) => {
                out.push(c);
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                }
            }
            None => {
                if c == '"' || c == '\'' {
                    quote = Some(c);
                    out.push(c);
                } else if !c.is_whitespace() {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Count of non-blank lines.
pub fn count_loc(text: &str) -> u64 {
    text.lines().filter(|l| !l.trim().is_empty()).count() as u64
}
