//! Project facts needed to instantiate prompts: build system, Java
//! version, testing framework, and the focal class text itself.

pub mod gradle;
pub mod maven;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::FocalPair;

#[derive(Debug, thiserror::Error)]
pub enum ContextError {
    #[error("no pom.xml, build.gradle or build.gradle.kts in {0}")]
    UnsupportedBuildSystem(PathBuf),
    #[error("{path}: {message}")]
    BuildFile { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuildSystem {
    Maven,
    Gradle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Framework {
    JUnit4,
    JUnit5,
    TestNG,
    Unknown,
}

impl Framework {
    fn display_name(self) -> &'static str {
        match self {
            Framework::JUnit4 | Framework::JUnit5 => "JUnit",
            Framework::TestNG => "TestNG",
            Framework::Unknown => "Unknown",
        }
    }

    /// Map a dependency coordinate to a framework, if it names one.
    pub fn from_coordinate(group: &str, artifact: &str) -> Option<Framework> {
        match (group, artifact) {
            ("junit", "junit") => Some(Framework::JUnit4),
            ("org.junit.jupiter", _) => Some(Framework::JUnit5),
            ("org.testng", "testng") => Some(Framework::TestNG),
            _ => None,
        }
    }

    fn rank(self) -> u8 {
        match self {
            Framework::JUnit5 => 3,
            Framework::JUnit4 => 2,
            Framework::TestNG => 1,
            Framework::Unknown => 0,
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Framework::JUnit4 => "junit4",
            Framework::JUnit5 => "junit5",
            Framework::TestNG => "testng",
            Framework::Unknown => "unknown",
        })
    }
}

impl std::str::FromStr for Framework {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "junit4" => Ok(Framework::JUnit4),
            "junit5" => Ok(Framework::JUnit5),
            "testng" => Ok(Framework::TestNG),
            "unknown" => Ok(Framework::Unknown),
            other => Err(format!("unknown framework {other:?}")),
        }
    }
}

/// Keep the strongest framework seen; JUnit 5 wins over a vintage JUnit 4
/// dependency declared alongside it.
pub(crate) fn strongest(hits: impl IntoIterator<Item = FrameworkFacts>) -> FrameworkFacts {
    let mut best = FrameworkFacts {
        framework: Framework::Unknown,
        version: None,
    };
    for hit in hits {
        if hit.framework.rank() > best.framework.rank()
            || (hit.framework == best.framework && best.version.is_none())
        {
            best = hit;
        }
    }
    best
}

/// `1.8` style versions become `8`.
pub(crate) fn normalize_java_version(raw: &str) -> Option<String> {
    let v = raw.trim().trim_matches(['"', '\'']);
    let v = v.strip_prefix("JavaVersion.VERSION_").unwrap_or(v);
    let v = v.replace('_', ".");
    let v = v.strip_prefix("1.").map(str::to_string).unwrap_or(v);
    if !v.is_empty() && v.chars().all(|c| c.is_ascii_digit() || c == '.') {
        Some(v)
    } else {
        None
    }
}

pub const DEFAULT_JAVA_VERSION: &str = "8";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildDescriptor {
    pub system: BuildSystem,
    pub build_file: PathBuf,
    pub java_version: String,
    pub framework: Framework,
    pub framework_version: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BuildDescriptor {
    pub fn root(&self) -> &Path {
        self.build_file.parent().unwrap_or(Path::new("."))
    }

    /// Display string such as `JUnit 4.13.2`.
    pub fn testing_framework(&self) -> String {
        let name = self.framework.display_name();
        match (&self.framework_version, self.framework) {
            (Some(v), _) => format!("{name} {v}"),
            (None, Framework::JUnit4) => format!("{name} 4"),
            (None, Framework::JUnit5) => format!("{name} 5"),
            (None, _) => name.to_string(),
        }
    }
}

/// Maven when `pom.xml` exists at `root`, else Gradle when a
/// `build.gradle(.kts)` does. Both present: Maven, with a warning.
pub fn detect_build_system(root: &Path) -> Result<(BuildSystem, Vec<String>), ContextError> {
    let maven = root.join("pom.xml").is_file();
    let gradle = gradle_build_file(root).is_some();
    match (maven, gradle) {
        (true, true) => Ok((
            BuildSystem::Maven,
            vec!["both pom.xml and a Gradle build file present; using Maven".to_string()],
        )),
        (true, false) => Ok((BuildSystem::Maven, Vec::new())),
        (false, true) => Ok((BuildSystem::Gradle, Vec::new())),
        (false, false) => Err(ContextError::UnsupportedBuildSystem(root.to_path_buf())),
    }
}

fn gradle_build_file(root: &Path) -> Option<PathBuf> {
    ["build.gradle", "build.gradle.kts"]
        .iter()
        .map(|n| root.join(n))
        .find(|p| p.is_file())
}

pub(crate) fn read_build_file(path: &Path) -> Result<String, ContextError> {
    std::fs::read_to_string(path).map_err(|e| ContextError::BuildFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn extract_build_descriptor(root: &Path) -> Result<BuildDescriptor, ContextError> {
    let (system, mut warnings) = detect_build_system(root)?;
    let (build_file, facts) = match system {
        BuildSystem::Maven => {
            let path = root.join("pom.xml");
            let facts = maven::resolve_pom(&path)?;
            (path, facts)
        }
        BuildSystem::Gradle => {
            let path = gradle_build_file(root).expect("detected above");
            let text = read_build_file(&path)?;
            (path, gradle::script_facts(&text))
        }
    };
    let java_version = match facts.java_version {
        Some(v) => v,
        None => {
            warnings.push(format!(
                "no Java version declared in {}; assuming {DEFAULT_JAVA_VERSION}",
                build_file.display()
            ));
            DEFAULT_JAVA_VERSION.to_string()
        }
    };
    Ok(BuildDescriptor {
        system,
        build_file,
        java_version,
        framework: facts.framework.framework,
        framework_version: facts.framework.version,
        warnings,
    })
}

/// What a build file tells us, before defaults are applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildFacts {
    pub java_version: Option<String>,
    pub framework: FrameworkFacts,
}

/// The test framework a build file declares, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameworkFacts {
    pub framework: Framework,
    pub version: Option<String>,
}

/// A worked focal/test example for few-shot prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub focal_class: String,
    pub test_class: String,
    pub testing_framework: String,
    pub java_version: String,
}

impl Exemplar {
    /// The calculator pair shipped with the harness.
    pub fn bundled() -> Self {
        Self {
            focal_class: include_str!("../../exemplars/Calculator.java").to_string(),
            test_class: include_str!("../../exemplars/CalculatorTests.java").to_string(),
            testing_framework: "JUnit 5.10.2".to_string(),
            java_version: "17".to_string(),
        }
    }

    pub fn load(
        focal: &Path,
        test: &Path,
        testing_framework: &str,
        java_version: &str,
    ) -> Result<Self, ContextError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| ContextError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        Ok(Self {
            focal_class: read(focal)?,
            test_class: read(test)?,
            testing_framework: testing_framework.to_string(),
            java_version: java_version.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptContext {
    pub focal_class: String,
    pub testing_framework: String,
    pub java_version: String,
    pub example_focal_class: Option<String>,
    pub example_test_class: Option<String>,
    pub example_testing_framework: Option<String>,
    pub example_java_version: Option<String>,
}

impl PromptContext {
    /// Value bound to a template variable; `None` when the variable is
    /// unknown or its optional slot is empty.
    pub fn value(&self, name: &str) -> Option<&str> {
        match name {
            "focal_class" => Some(&self.focal_class),
            "testing_framework" => Some(&self.testing_framework),
            "java_version" => Some(&self.java_version),
            "example_focal_class" | "example_java_class" => self.example_focal_class.as_deref(),
            "example_test_class" => self.example_test_class.as_deref(),
            "example_testing_framework" => self.example_testing_framework.as_deref(),
            "example_java_version" => self.example_java_version.as_deref(),
            _ => None,
        }
    }
}

pub fn build_prompt_context(
    root: &Path,
    pair: &FocalPair,
    descriptor: &BuildDescriptor,
    example: Option<&Exemplar>,
) -> Result<PromptContext, ContextError> {
    let path = root.join(&pair.focal_path);
    let focal_class = std::fs::read_to_string(&path).map_err(|source| ContextError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(PromptContext {
        focal_class,
        testing_framework: descriptor.testing_framework(),
        java_version: descriptor.java_version.clone(),
        example_focal_class: example.map(|e| e.focal_class.clone()),
        example_test_class: example.map(|e| e.test_class.clone()),
        example_testing_framework: example.map(|e| e.testing_framework.clone()),
        example_java_version: example.map(|e| e.java_version.clone()),
    })
}
