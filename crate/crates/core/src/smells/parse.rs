//! Building [`TestClassModel`]s from Java source.

use std::collections::{BTreeMap, BTreeSet};

use tree_sitter::Node;

use super::{Assertion, CallSite, Receiver, TestClassModel, TestMethodModel};
use crate::context::Framework;
use crate::java::{strip_whitespace, visit, JavaSource, SyntaxError};

pub(super) const ASSERTIONS: &[&str] = &[
    "assertEquals",
    "assertTrue",
    "assertFalse",
    "assertNull",
    "assertNotNull",
    "assertSame",
    "assertNotSame",
    "assertThat",
    "assertArrayEquals",
    "fail",
    "assertNotEquals",
    "assertThrows",
];

/// Arguments an assertion takes without a message.
fn base_arity(kind: &str) -> usize {
    match kind {
        "fail" => 0,
        "assertTrue" | "assertFalse" | "assertNull" | "assertNotNull" => 1,
        _ => 2,
    }
}

/// Kinds whose overloads also take a numeric delta, making one extra
/// argument ambiguous.
fn takes_delta(kind: &str) -> bool {
    matches!(kind, "assertEquals" | "assertNotEquals" | "assertArrayEquals")
}

const NUMERIC_LITERALS: &[&str] = &[
    "decimal_integer_literal",
    "hex_integer_literal",
    "octal_integer_literal",
    "binary_integer_literal",
    "decimal_floating_point_literal",
    "hex_floating_point_literal",
];

fn is_numeric_literal(node: Node<'_>) -> bool {
    if NUMERIC_LITERALS.contains(&node.kind()) {
        return true;
    }
    node.kind() == "unary_expression"
        && node.named_child_count() == 1
        && node.named_child(0).is_some_and(|n| NUMERIC_LITERALS.contains(&n.kind()))
}

fn is_stringish(node: Node<'_>) -> bool {
    match node.kind() {
        "string_literal" | "text_block" => true,
        "binary_expression" => {
            let mut found = false;
            visit(node, &mut |n| {
                found |= matches!(n.kind(), "string_literal" | "text_block");
                !found
            });
            found
        }
        "parenthesized_expression" => node.named_child(0).is_some_and(is_stringish),
        _ => false,
    }
}

/// Simple type name: no package, generics or array brackets.
fn simple_type(text: &str) -> String {
    let base = text.split('<').next().unwrap_or(text);
    let base = base.trim().trim_end_matches("[]").trim();
    base.rsplit('.').next().unwrap_or(base).trim().to_string()
}

fn children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.named_children(&mut cursor).collect()
}

fn annotations(src: &JavaSource, decl: Node<'_>) -> (BTreeSet<String>, bool) {
    let mut names = BTreeSet::new();
    let mut expects = false;
    let Some(mods) = children(decl).into_iter().find(|c| c.kind() == "modifiers") else {
        return (names, expects);
    };
    for ann in children(mods) {
        if !matches!(ann.kind(), "annotation" | "marker_annotation") {
            continue;
        }
        let Some(name) = ann.child_by_field_name("name") else { continue };
        let name = simple_type(src.text_of(name));
        if name == "Test" {
            if let Some(args) = ann.child_by_field_name("arguments") {
                visit(args, &mut |n| {
                    if n.kind() == "element_value_pair"
                        && n.child_by_field_name("key").is_some_and(|k| src.text_of(k) == "expected")
                    {
                        expects = true;
                    }
                    true
                });
            }
        }
        names.insert(name);
    }
    (names, expects)
}

/// Declared variable types visible in a method: parameters, locals,
/// loop and catch variables. Block scoping is ignored.
fn local_types(src: &JavaSource, method: Node<'_>) -> BTreeMap<String, String> {
    let mut types = BTreeMap::new();
    visit(method, &mut |n| {
        match n.kind() {
            "formal_parameter" | "enhanced_for_statement" | "catch_formal_parameter" => {
                let ty = n
                    .child_by_field_name("type")
                    .or_else(|| children(n).into_iter().find(|c| c.kind() == "catch_type"));
                if let (Some(ty), Some(name)) = (ty, n.child_by_field_name("name")) {
                    types.insert(src.text_of(name).to_string(), simple_type(src.text_of(ty)));
                }
            }
            "local_variable_declaration" => {
                let Some(ty) = n.child_by_field_name("type") else { return true };
                let declared = simple_type(src.text_of(ty));
                let mut cursor = n.walk();
                for decl in n.children_by_field_name("declarator", &mut cursor) {
                    let Some(name) = decl.child_by_field_name("name") else { continue };
                    let inferred = match (declared.as_str(), decl.child_by_field_name("value")) {
                        ("var", Some(v)) if v.kind() == "object_creation_expression" => v
                            .child_by_field_name("type")
                            .map(|t| simple_type(src.text_of(t)))
                            .unwrap_or_default(),
                        _ => declared.clone(),
                    };
                    types.insert(src.text_of(name).to_string(), inferred);
                }
            }
            "lambda_expression" => {
                // Lambda parameters have no declared type; shadow them.
                if let Some(params) = n.child_by_field_name("parameters") {
                    visit(params, &mut |p| {
                        if p.kind() == "identifier" {
                            types.insert(src.text_of(p).to_string(), String::new());
                        }
                        true
                    });
                }
            }
            _ => {}
        }
        true
    });
    types
}

struct Scope<'a> {
    locals: &'a BTreeMap<String, String>,
    fields: &'a BTreeMap<String, String>,
}

impl Scope<'_> {
    fn type_of(&self, name: &str) -> Option<&str> {
        self.locals
            .get(name)
            .or_else(|| self.fields.get(name))
            .map(String::as_str)
    }
}

fn receiver(src: &JavaSource, object: Option<Node<'_>>, scope: &Scope<'_>) -> Receiver {
    let Some(object) = object else {
        return Receiver::None;
    };
    match object.kind() {
        "identifier" => {
            let name = src.text_of(object);
            match scope.type_of(name) {
                Some(ty) => Receiver::Variable {
                    name: name.to_string(),
                    type_name: ty.to_string(),
                },
                None => Receiver::Static(name.to_string()),
            }
        }
        "field_access"
            if object
                .child_by_field_name("object")
                .is_some_and(|o| o.kind() == "this") =>
        {
            let name = object
                .child_by_field_name("field")
                .map(|f| src.text_of(f))
                .unwrap_or_default();
            match scope.fields.get(name) {
                Some(ty) => Receiver::Variable {
                    name: name.to_string(),
                    type_name: ty.clone(),
                },
                None => Receiver::Other(strip_whitespace(src.text_of(object))),
            }
        }
        "object_creation_expression" => Receiver::New(
            object
                .child_by_field_name("type")
                .map(|t| simple_type(src.text_of(t)))
                .unwrap_or_default(),
        ),
        "parenthesized_expression" => receiver(src, object.named_child(0), scope),
        _ => Receiver::Other(strip_whitespace(src.text_of(object))),
    }
}

fn is_assertion(kind: &str, recv: &Receiver) -> bool {
    ASSERTIONS.contains(&kind)
        && match recv {
            Receiver::None => true,
            Receiver::Static(name) | Receiver::Other(name) => {
                name.ends_with("Assert") || name.ends_with("Assertions") || name.ends_with("AssertJUnit")
            }
            _ => false,
        }
}

fn message_position(kind: &str, args: &[Node<'_>], framework: Framework) -> Option<usize> {
    let base = base_arity(kind);
    let n = args.len();
    if n <= base {
        return None;
    }
    let last_first = framework != Framework::JUnit4;
    if kind == "fail" {
        return Some(0);
    }
    if takes_delta(kind) && n == base + 1 {
        // One extra argument is either a message or a delta.
        return if last_first {
            let last = args[n - 1];
            (is_stringish(last) || last.kind() == "lambda_expression").then_some(n - 1)
        } else {
            is_stringish(args[0]).then_some(0)
        };
    }
    Some(if last_first { n - 1 } else { 0 })
}

fn assertion(src: &JavaSource, kind: &str, call: Node<'_>, framework: Framework) -> Assertion {
    let args = call
        .child_by_field_name("arguments")
        .map(children)
        .unwrap_or_default()
        .into_iter()
        .filter(|a| !matches!(a.kind(), "line_comment" | "block_comment"))
        .collect::<Vec<_>>();
    let message = message_position(kind, &args, framework);
    let argument_texts: Vec<String> = args.iter().map(|a| strip_whitespace(src.text_of(*a))).collect();
    let operands = argument_texts
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != message)
        .map(|(_, t)| t.clone())
        .collect();
    let numeric_literal_args = args.iter().filter(|a| is_numeric_literal(**a)).count() as u32;
    let mut calls_to_string = false;
    for arg in &args {
        visit(*arg, &mut |n| {
            if n.kind() == "method_invocation"
                && n.child_by_field_name("name").is_some_and(|m| src.text_of(m) == "toString")
            {
                calls_to_string = true;
            }
            !calls_to_string
        });
    }
    Assertion {
        kind: kind.to_string(),
        has_message: message.is_some(),
        argument_texts,
        operands,
        numeric_literal_args,
        calls_to_string,
    }
}

const CONTROL: &[&str] = &[
    "if_statement",
    "switch_expression",
    "switch_statement",
    "ternary_expression",
    "for_statement",
    "enhanced_for_statement",
    "while_statement",
    "do_statement",
];

fn method_model(
    src: &JavaSource,
    decl: Node<'_>,
    fields: &BTreeMap<String, String>,
    framework: Framework,
) -> TestMethodModel {
    let name = decl
        .child_by_field_name("name")
        .map(|n| src.text_of(n).to_string())
        .unwrap_or_default();
    let (annotations, expects_exception) = annotations(src, decl);
    let locals = local_types(src, decl);
    let scope = Scope {
        locals: &locals,
        fields,
    };
    let mut model = TestMethodModel {
        name,
        annotations,
        expects_exception,
        ..TestMethodModel::default()
    };
    let Some(body) = decl.child_by_field_name("body") else {
        return model;
    };
    model.statements = children(body)
        .iter()
        .filter(|c| !matches!(c.kind(), "line_comment" | "block_comment"))
        .count() as u32;

    visit(body, &mut |n| {
        let kind = n.kind();
        if CONTROL.contains(&kind) {
            model.control_statements += 1;
        }
        match kind {
            "throw_statement" | "catch_clause" => model.exception_handling += 1,
            "method_invocation" => {
                let call_name = n
                    .child_by_field_name("name")
                    .map(|m| src.text_of(m).to_string())
                    .unwrap_or_default();
                let recv = receiver(src, n.child_by_field_name("object"), &scope);
                if is_assertion(&call_name, &recv) {
                    model.assertions.push(assertion(src, &call_name, n, framework));
                }
                model.calls.push(CallSite {
                    receiver: recv,
                    name: call_name,
                });
            }
            "object_creation_expression" => {
                if let Some(t) = n.child_by_field_name("type") {
                    model.created_types.push(simple_type(src.text_of(t)));
                }
            }
            "identifier" => {
                let text = src.text_of(n);
                let parent = n.parent();
                let is_member_name = parent.is_some_and(|p| {
                    (p.kind() == "method_invocation" && p.child_by_field_name("name") == Some(n))
                        || (p.kind() == "field_access" && p.child_by_field_name("field") == Some(n))
                });
                if !is_member_name && fields.contains_key(text) && !locals.contains_key(text) {
                    model.field_reads.insert(text.to_string());
                }
            }
            "field_access" => {
                if n.child_by_field_name("object").is_some_and(|o| o.kind() == "this") {
                    if let Some(f) = n.child_by_field_name("field") {
                        if fields.contains_key(src.text_of(f)) {
                            model.field_reads.insert(src.text_of(f).to_string());
                        }
                    }
                }
            }
            _ => {}
        }
        true
    });
    model.local_types = locals.into_values().filter(|t| !t.is_empty()).collect();
    model
}

fn field_types(src: &JavaSource, body: Node<'_>) -> BTreeMap<String, String> {
    let mut fields = BTreeMap::new();
    for member in children(body) {
        if member.kind() != "field_declaration" {
            continue;
        }
        let Some(ty) = member.child_by_field_name("type") else { continue };
        let ty = simple_type(src.text_of(ty));
        let mut cursor = member.walk();
        for decl in member.children_by_field_name("declarator", &mut cursor) {
            if let Some(name) = decl.child_by_field_name("name") {
                fields.insert(src.text_of(name).to_string(), ty.clone());
            }
        }
    }
    fields
}

/// Fields assigned anywhere in a setup method.
fn assigned_fields(
    src: &JavaSource,
    method: Node<'_>,
    fields: &BTreeMap<String, String>,
) -> BTreeSet<String> {
    let locals = local_types(src, method);
    let mut out = BTreeSet::new();
    visit(method, &mut |n| {
        if n.kind() == "assignment_expression" {
            if let Some(left) = n.child_by_field_name("left") {
                let name = match left.kind() {
                    "identifier" if !locals.contains_key(src.text_of(left)) => Some(src.text_of(left)),
                    "field_access"
                        if left.child_by_field_name("object").is_some_and(|o| o.kind() == "this") =>
                    {
                        left.child_by_field_name("field").map(|f| src.text_of(f))
                    }
                    _ => None,
                };
                if let Some(name) = name.filter(|n| fields.contains_key(*n)) {
                    out.insert(name.to_string());
                }
            }
        }
        true
    });
    out
}

const SETUP_ANNOTATIONS: &[&str] = &["Before", "BeforeEach"];
const TEST_ANNOTATIONS: &[&str] = &["Test", "ParameterizedTest"];

/// The framework a test source targets, judged by its imports.
pub fn infer_framework(source: &str) -> Framework {
    if source.contains("org.junit.jupiter") {
        Framework::JUnit5
    } else if source.contains("org.testng") {
        Framework::TestNG
    } else if source.contains("org.junit") || source.contains("junit.framework") {
        Framework::JUnit4
    } else {
        Framework::Unknown
    }
}

/// Model of the first top-level class in `source`. `Unknown` picks the
/// framework from the imports; a source with no hints is read as JUnit 5.
pub fn parse_test_class(source: &str, framework: Framework) -> Result<TestClassModel, SyntaxError> {
    let src = JavaSource::parse_strict(source)?;
    let framework = match framework {
        Framework::Unknown => match infer_framework(source) {
            Framework::Unknown => Framework::JUnit5,
            f => f,
        },
        f => f,
    };
    let mut model = TestClassModel::default();
    let Some(class) = src
        .top_level_type_nodes()
        .into_iter()
        .find(|n| n.kind() == "class_declaration")
    else {
        return Ok(model);
    };
    model.class_name = class
        .child_by_field_name("name")
        .map(|n| src.text_of(n).to_string())
        .unwrap_or_default();
    let Some(body) = class.child_by_field_name("body") else {
        return Ok(model);
    };
    let fields = field_types(&src, body);

    let mut stack = vec![body];
    let mut top = true;
    while let Some(body) = stack.pop() {
        for member in children(body) {
            match member.kind() {
                "constructor_declaration" if top => model.has_constructor = true,
                "method_declaration" => {
                    let method = method_model(&src, member, &fields, framework);
                    let is_setup = method.annotations.iter().any(|a| SETUP_ANNOTATIONS.contains(&a.as_str()))
                        || (framework == Framework::JUnit4 && method.name == "setUp");
                    if is_setup {
                        model
                            .setup_fields_assigned
                            .extend(assigned_fields(&src, member, &fields));
                    }
                    if method.annotations.iter().any(|a| TEST_ANNOTATIONS.contains(&a.as_str())) {
                        model.test_methods.push(method.clone());
                    }
                    model.all_methods.push(method);
                }
                "class_declaration" => {
                    if let Some(inner) = member.child_by_field_name("body") {
                        stack.push(inner);
                    }
                }
                _ => {}
            }
        }
        top = false;
    }
    model.field_types = fields;
    Ok(model)
}
