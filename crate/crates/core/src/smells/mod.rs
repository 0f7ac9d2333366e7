//! Static test-smell detection for one test class against its focal class.

mod parse;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::java::JavaSource;

pub use parse::{infer_framework, parse_test_class};
pub use crate::java::SyntaxError as SourceParseError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub kind: String,
    pub has_message: bool,
    /// Every argument, whitespace-stripped.
    pub argument_texts: Vec<String>,
    /// Arguments minus the message.
    pub operands: Vec<String>,
    pub numeric_literal_args: u32,
    pub calls_to_string: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Receiver {
    /// Unqualified call.
    None,
    /// A local, parameter or field with a known declared type.
    Variable { name: String, type_name: String },
    /// A bare name that is not a known variable, usually a class.
    Static(String),
    /// `new T(...)`.
    New(String),
    /// Any other expression, whitespace-stripped.
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub receiver: Receiver,
    pub name: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestMethodModel {
    pub name: String,
    pub annotations: BTreeSet<String>,
    /// `@Test(expected = ...)`.
    pub expects_exception: bool,
    pub assertions: Vec<Assertion>,
    pub control_statements: u32,
    /// Top-level statements of the body.
    pub statements: u32,
    /// Throw statements plus catch clauses.
    pub exception_handling: u32,
    pub calls: Vec<CallSite>,
    pub created_types: Vec<String>,
    /// Declared types of locals and parameters.
    pub local_types: BTreeSet<String>,
    pub field_reads: BTreeSet<String>,
}

impl TestMethodModel {
    pub fn numeric_literal_args(&self) -> u32 {
        self.assertions.iter().map(|a| a.numeric_literal_args).sum()
    }

    /// Focal-class methods called from this method, one entry per call.
    pub fn production_calls(&self, focal: &FocalClass) -> Vec<String> {
        self.calls
            .iter()
            .filter(|c| focal.methods.contains(&c.name))
            .filter(|c| match &c.receiver {
                Receiver::Variable { type_name, .. } => *type_name == focal.name,
                Receiver::Static(name) | Receiver::New(name) => *name == focal.name,
                Receiver::None | Receiver::Other(_) => false,
            })
            .map(|c| c.name.clone())
            .collect()
    }

    fn calls_on(&self, receiver: &str, names: &[&str]) -> bool {
        self.calls.iter().any(|c| {
            names.contains(&c.name.as_str())
                && match &c.receiver {
                    Receiver::Static(r) | Receiver::Other(r) => {
                        r == receiver || r.ends_with(&format!(".{receiver}"))
                    }
                    _ => false,
                }
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestClassModel {
    pub class_name: String,
    pub has_constructor: bool,
    pub setup_fields_assigned: BTreeSet<String>,
    pub test_methods: Vec<TestMethodModel>,
    pub all_methods: Vec<TestMethodModel>,
    /// Field name to declared simple type.
    pub field_types: BTreeMap<String, String>,
}

/// The production class under test, reduced to what smell rules need.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalClass {
    pub name: String,
    pub methods: BTreeSet<String>,
}

impl FocalClass {
    /// First top-level type of `source` and its declared methods.
    pub fn from_source(source: &str) -> Self {
        let parsed = JavaSource::parse(source);
        let Some(decl) = parsed.top_level_types().into_iter().next() else {
            return Self::default();
        };
        let methods = parsed.declared_methods(Some(&decl.name)).into_iter().collect();
        Self {
            name: decl.name,
            methods,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmellProfile {
    #[serde(rename = "AR")]
    pub assertion_roulette: u32,
    #[serde(rename = "CTL")]
    pub conditional_test_logic: u32,
    #[serde(rename = "CI")]
    pub constructor_initialization: u32,
    #[serde(rename = "DA")]
    pub duplicate_assert: u32,
    #[serde(rename = "EA")]
    pub eager_test: u32,
    #[serde(rename = "EM")]
    pub empty_test: u32,
    #[serde(rename = "EH")]
    pub exception_handling: u32,
    #[serde(rename = "IT")]
    pub ignored_test: u32,
    #[serde(rename = "LT")]
    pub lazy_test: u32,
    #[serde(rename = "MNT")]
    pub magic_number_test: u32,
    #[serde(rename = "MG")]
    pub mystery_guest: u32,
    #[serde(rename = "RP")]
    pub redundant_print: u32,
    #[serde(rename = "RA")]
    pub redundant_assertion: u32,
    #[serde(rename = "RO")]
    pub resource_optimism: u32,
    #[serde(rename = "SE")]
    pub sensitive_equality: u32,
    #[serde(rename = "ST")]
    pub sleepy_test: u32,
    #[serde(rename = "UT")]
    pub unknown_test: u32,
    #[serde(rename = "DefaultTest")]
    pub default_test: u32,
    #[serde(rename = "GeneralFixture")]
    pub general_fixture: u32,
}

impl SmellProfile {
    /// Column names in report order.
    pub const COLUMNS: [&'static str; 19] = [
        "AR", "CTL", "CI", "DA", "EA", "EM", "EH", "IT", "LT", "MNT", "MG", "RP", "RA", "RO",
        "SE", "ST", "UT", "DefaultTest", "GeneralFixture",
    ];

    /// Values in [`Self::COLUMNS`] order.
    pub fn values(&self) -> [u32; 19] {
        [
            self.assertion_roulette,
            self.conditional_test_logic,
            self.constructor_initialization,
            self.duplicate_assert,
            self.eager_test,
            self.empty_test,
            self.exception_handling,
            self.ignored_test,
            self.lazy_test,
            self.magic_number_test,
            self.mystery_guest,
            self.redundant_print,
            self.redundant_assertion,
            self.resource_optimism,
            self.sensitive_equality,
            self.sleepy_test,
            self.unknown_test,
            self.default_test,
            self.general_fixture,
        ]
    }

    pub fn from_values(v: [u32; 19]) -> Self {
        Self {
            assertion_roulette: v[0],
            conditional_test_logic: v[1],
            constructor_initialization: v[2],
            duplicate_assert: v[3],
            eager_test: v[4],
            empty_test: v[5],
            exception_handling: v[6],
            ignored_test: v[7],
            lazy_test: v[8],
            magic_number_test: v[9],
            mystery_guest: v[10],
            redundant_print: v[11],
            redundant_assertion: v[12],
            resource_optimism: v[13],
            sensitive_equality: v[14],
            sleepy_test: v[15],
            unknown_test: v[16],
            default_test: v[17],
            general_fixture: v[18],
        }
    }
}

const FILE_TYPES: &[&str] = &[
    "File",
    "FileReader",
    "FileWriter",
    "FileInputStream",
    "FileOutputStream",
    "RandomAccessFile",
];
const DB_TYPES: &[&str] = &["Connection", "Statement", "PreparedStatement", "DriverManager"];
const TWO_OPERAND: &[&str] = &[
    "assertEquals",
    "assertNotEquals",
    "assertSame",
    "assertNotSame",
    "assertArrayEquals",
];
const EXISTENCE_CHECKS: &[&str] = &["exists", "isFile", "notExists"];

fn count(methods: &[TestMethodModel], rule: impl Fn(&TestMethodModel) -> bool) -> u32 {
    methods.iter().filter(|m| rule(m)).count() as u32
}

fn mystery_guest(m: &TestMethodModel) -> bool {
    m.created_types.iter().any(|t| FILE_TYPES.contains(&t.as_str()))
        || m.local_types.iter().any(|t| DB_TYPES.contains(&t.as_str()))
        || m.calls.iter().any(|c| match &c.receiver {
            Receiver::Static(r) | Receiver::Other(r) => {
                r == "Files"
                    || r.ends_with(".Files")
                    || r == "DriverManager"
                    || r.ends_with(".DriverManager")
            }
            _ => false,
        })
}

fn resource_optimism(m: &TestMethodModel, fields: &BTreeMap<String, String>) -> bool {
    let uses_file = m.created_types.iter().any(|t| t == "File")
        || m.local_types.contains("File")
        || m.field_reads.iter().any(|f| fields.get(f).is_some_and(|t| t == "File"));
    uses_file && !m.calls.iter().any(|c| EXISTENCE_CHECKS.contains(&c.name.as_str()))
}

fn duplicate_assert(m: &TestMethodModel) -> bool {
    let mut seen = BTreeSet::new();
    m.assertions
        .iter()
        .filter(|a| !a.argument_texts.is_empty())
        .any(|a| !seen.insert(&a.argument_texts))
}

fn redundant_assertion(m: &TestMethodModel) -> bool {
    m.assertions.iter().any(|a| {
        TWO_OPERAND.contains(&a.kind.as_str()) && a.operands.len() >= 2 && a.operands[0] == a.operands[1]
    })
}

/// Apply every smell rule. Pure: the result depends only on the models,
/// not on method order.
pub fn detect_smells(test: &TestClassModel, focal: &FocalClass) -> SmellProfile {
    let methods = &test.test_methods;
    let production: Vec<BTreeSet<String>> = methods
        .iter()
        .map(|m| m.production_calls(focal).into_iter().collect())
        .collect();
    let lazy = (0..methods.len())
        .filter(|&i| {
            (0..methods.len()).any(|j| j != i && !production[i].is_disjoint(&production[j]))
        })
        .count() as u32;

    let general_fixture = !test.setup_fields_assigned.is_empty()
        && !methods.is_empty()
        && test
            .setup_fields_assigned
            .iter()
            .any(|f| methods.iter().any(|m| !m.field_reads.contains(f)));

    SmellProfile {
        assertion_roulette: count(methods, |m| {
            m.assertions.iter().filter(|a| !a.has_message).count() > 1
        }),
        conditional_test_logic: count(methods, |m| m.control_statements > 0),
        constructor_initialization: test.has_constructor as u32,
        duplicate_assert: count(methods, duplicate_assert),
        eager_test: production.iter().filter(|p| p.len() > 1).count() as u32,
        empty_test: count(methods, |m| m.statements == 0),
        exception_handling: count(methods, |m| m.exception_handling > 0),
        ignored_test: count(methods, |m| {
            m.annotations.contains("Ignore") || m.annotations.contains("Disabled")
        }),
        lazy_test: lazy,
        magic_number_test: count(methods, |m| m.numeric_literal_args() > 0),
        mystery_guest: count(methods, mystery_guest),
        redundant_print: count(methods, |m| {
            m.calls_on("System.out", &["print", "println", "printf", "write"])
                || m.calls_on("System.err", &["print", "println", "printf", "write"])
        }),
        redundant_assertion: count(methods, redundant_assertion),
        resource_optimism: count(methods, |m| resource_optimism(m, &test.field_types)),
        sensitive_equality: count(methods, |m| m.assertions.iter().any(|a| a.calls_to_string)),
        sleepy_test: count(methods, |m| m.calls_on("Thread", &["sleep"])),
        unknown_test: count(methods, |m| m.assertions.is_empty() && !m.expects_exception),
        default_test: matches!(test.class_name.as_str(), "ExampleUnitTest" | "ExampleInstrumentedTest")
            as u32,
        general_fixture: general_fixture as u32,
    }
}
