//! Idempotent JaCoCo and PITest injection into Maven and Gradle builds.

mod gradle;
mod maven;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::context::{BuildDescriptor, BuildSystem, Framework};
use crate::journal::Workspace;

#[derive(Debug, thiserror::Error)]
#[error("build file {path}: {message}")]
pub struct BuildFileError {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolVersions {
    pub jacoco: String,
    pub pitest: String,
    pub pitest_junit5: String,
    pub gradle_pitest: String,
}

impl Default for ToolVersions {
    fn default() -> Self {
        Self {
            jacoco: "0.8.12".into(),
            pitest: "1.16.1".into(),
            pitest_junit5: "1.2.1".into(),
            gradle_pitest: "1.15.0".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instrumented {
    pub coverage: bool,
    pub mutation: bool,
}

/// Result of an `ensure_*` call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ensured {
    pub changed: bool,
    pub warnings: Vec<String>,
}

fn is_kotlin(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "kts")
}

fn system_of(path: &Path) -> BuildSystem {
    if path.file_name().is_some_and(|n| n == "pom.xml") || path.extension().is_some_and(|e| e == "xml") {
        BuildSystem::Maven
    } else {
        BuildSystem::Gradle
    }
}

fn read(path: &Path) -> Result<String, BuildFileError> {
    std::fs::read_to_string(path).map_err(|e| BuildFileError {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Which tools a build file already declares, by plugin coordinates.
pub fn instrumentation_of(system: BuildSystem, text: &str) -> Result<Instrumented, String> {
    match system {
        BuildSystem::Maven => maven::instrumentation(text),
        BuildSystem::Gradle => Ok(gradle::instrumentation(text)),
    }
}

pub fn is_instrumented(build_file: &Path) -> Result<Instrumented, BuildFileError> {
    let text = read(build_file)?;
    instrumentation_of(system_of(build_file), &text).map_err(|message| BuildFileError {
        path: build_file.to_path_buf(),
        message,
    })
}

/// Text with the coverage tool added, or None when already present.
/// `kotlin` selects Kotlin DSL syntax for Gradle.
pub fn inject_coverage(
    system: BuildSystem,
    kotlin: bool,
    text: &str,
    versions: &ToolVersions,
) -> Result<Option<String>, String> {
    match system {
        BuildSystem::Maven => maven::inject_coverage(text, versions),
        BuildSystem::Gradle => Ok(gradle::inject_coverage(text, kotlin)),
    }
}

/// Text with the mutation tool added (None when already present), plus
/// warnings about pre-existing configuration that was left alone.
pub fn inject_mutation(
    system: BuildSystem,
    kotlin: bool,
    text: &str,
    framework: Framework,
    versions: &ToolVersions,
) -> Result<(Option<String>, Vec<String>), String> {
    let junit5 = framework == Framework::JUnit5;
    match system {
        BuildSystem::Maven => maven::inject_mutation(text, junit5, versions),
        BuildSystem::Gradle => Ok(gradle::inject_mutation(text, kotlin, junit5, versions)),
    }
}

fn apply(
    workspace: &mut Workspace,
    path: &Path,
    edit: impl FnOnce(&str) -> Result<(Option<String>, Vec<String>), String>,
) -> Result<Ensured, BuildFileError> {
    let err = |message: String| BuildFileError {
        path: path.to_path_buf(),
        message,
    };
    let text = read(path)?;
    let (new_text, warnings) = edit(&text).map_err(err)?;
    let changed = match new_text {
        Some(new_text) if new_text != text => {
            workspace
                .write(path, new_text.as_bytes())
                .map_err(|e| err(e.to_string()))?;
            true
        }
        _ => false,
    };
    for w in &warnings {
        tracing::warn!("{}: {w}", path.display());
    }
    Ok(Ensured { changed, warnings })
}

/// Add JaCoCo with XML reporting unless the build already declares it.
/// The original file is recoverable through `workspace`.
pub fn ensure_coverage_tool(
    workspace: &mut Workspace,
    descriptor: &BuildDescriptor,
    versions: &ToolVersions,
) -> Result<Ensured, BuildFileError> {
    let path = &descriptor.build_file;
    let kotlin = is_kotlin(path);
    apply(workspace, path, |text| {
        inject_coverage(descriptor.system, kotlin, text, versions).map(|t| (t, Vec::new()))
    })
}

/// Add PITest with XML output, and the JUnit 5 engine plugin for JUnit 5
/// projects. Target classes are supplied per run, not written here.
pub fn ensure_mutation_tool(
    workspace: &mut Workspace,
    descriptor: &BuildDescriptor,
    versions: &ToolVersions,
) -> Result<Ensured, BuildFileError> {
    let path = &descriptor.build_file;
    let kotlin = is_kotlin(path);
    apply(workspace, path, |text| {
        inject_mutation(descriptor.system, kotlin, text, descriptor.framework, versions)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const POM: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<project xmlns="http://maven.apache.org/POM/4.0.0">
  <modelVersion>4.0.0</modelVersion>
  <groupId>g</groupId>
  <artifactId>a</artifactId>
  <version>1</version>
  <build>
    <plugins>
      <plugin>
        <artifactId>maven-surefire-plugin</artifactId>
      </plugin>
    </plugins>
  </build>
</project>
"#;

    fn maven_cov(text: &str) -> String {
        inject_coverage(BuildSystem::Maven, false, text, &ToolVersions::default())
            .unwrap()
            .unwrap_or_else(|| text.to_string())
    }

    #[test]
    fn maven_coverage_inherits_sibling_indent() {
        let out = maven_cov(POM);
        assert!(out.contains(
            "      </plugin>\n      <plugin>\n        <groupId>org.jacoco</groupId>\n"
        ));
        assert!(out.ends_with("      </plugin>\n    </plugins>\n  </build>\n</project>\n"));
        assert_eq!(maven_cov(&out), out);
        let inst = instrumentation_of(BuildSystem::Maven, &out).unwrap();
        assert_eq!(inst, Instrumented { coverage: true, mutation: false });
    }

    #[test]
    fn maven_creates_build_section() {
        let pom = "<project>\n\t<modelVersion>4.0.0</modelVersion>\n</project>";
        let out = maven_cov(pom);
        assert!(out.starts_with(
            "<project>\n\t<modelVersion>4.0.0</modelVersion>\n\t<build>\n\t\t<plugins>\n\t\t\t<plugin>\n"
        ));
        assert!(out.ends_with("\t\t\t</plugin>\n\t\t</plugins>\n\t</build>\n</project>"));
        roxmltree::Document::parse(&out).unwrap();
    }

    #[test]
    fn maven_fills_empty_and_self_closing_plugins() {
        for pom in [
            "<project>\n  <build>\n    <plugins/>\n  </build>\n</project>\n",
            "<project>\n  <build>\n    <plugins>\n    </plugins>\n  </build>\n</project>\n",
        ] {
            let out = maven_cov(pom);
            assert!(out.contains("    <plugins>\n      <plugin>\n        <groupId>org.jacoco"), "{out}");
            assert!(out.contains("      </plugin>\n    </plugins>\n  </build>"), "{out}");
        }
    }

    #[test]
    fn maven_crlf_is_kept() {
        let pom = POM.replace('\n', "\r\n");
        let out = maven_cov(&pom);
        assert!(!out.replace("\r\n", "").contains('\n'));
    }

    #[test]
    fn maven_pitest_junit5_rule() {
        let v = ToolVersions::default();
        let (j4, _) = inject_mutation(BuildSystem::Maven, false, POM, Framework::JUnit4, &v).unwrap();
        let (j5, _) = inject_mutation(BuildSystem::Maven, false, POM, Framework::JUnit5, &v).unwrap();
        assert!(!j4.unwrap().contains("pitest-junit5-plugin"));
        let j5 = j5.unwrap();
        assert!(j5.contains("<artifactId>pitest-junit5-plugin</artifactId>"));
        assert!(j5.contains("<outputFormat>XML</outputFormat>"));
        let (again, warnings) =
            inject_mutation(BuildSystem::Maven, false, &j5, Framework::JUnit5, &v).unwrap();
        assert!(again.is_none() && warnings.is_empty());
    }

    #[test]
    fn existing_pitest_without_junit5_warns() {
        let pom = POM.replace(
            "<artifactId>maven-surefire-plugin</artifactId>",
            "<groupId>org.pitest</groupId><artifactId>pitest-maven</artifactId>",
        );
        let (out, warnings) = inject_mutation(
            BuildSystem::Maven,
            false,
            &pom,
            Framework::JUnit5,
            &ToolVersions::default(),
        )
        .unwrap();
        assert!(out.is_none());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn broken_pom_is_an_error() {
        assert!(inject_coverage(BuildSystem::Maven, false, "<project>", &ToolVersions::default()).is_err());
    }

    #[test]
    fn gradle_appends_at_end() {
        let script = "plugins {\n    id 'java'\n}\n\nrepositories { mavenCentral() }\n";
        let out = inject_coverage(BuildSystem::Gradle, false, script, &ToolVersions::default())
            .unwrap()
            .unwrap();
        assert!(out.starts_with(script));
        assert!(out.contains("apply plugin: 'jacoco'"));
        assert!(inject_coverage(BuildSystem::Gradle, false, &out, &ToolVersions::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn ensure_writes_through_workspace() {
        let dir = tempfile::tempdir().unwrap();
        let pom = dir.path().join("pom.xml");
        std::fs::write(&pom, POM).unwrap();
        let descriptor = BuildDescriptor {
            system: BuildSystem::Maven,
            build_file: pom.clone(),
            java_version: "17".into(),
            framework: Framework::JUnit5,
            framework_version: None,
            warnings: vec![],
        };
        let mut ws = Workspace::new(dir.path());
        let v = ToolVersions::default();
        assert!(ensure_coverage_tool(&mut ws, &descriptor, &v).unwrap().changed);
        assert!(ensure_mutation_tool(&mut ws, &descriptor, &v).unwrap().changed);
        assert!(!ensure_coverage_tool(&mut ws, &descriptor, &v).unwrap().changed);
        assert_eq!(
            is_instrumented(&pom).unwrap(),
            Instrumented { coverage: true, mutation: true }
        );
        ws.restore().unwrap();
        assert_eq!(std::fs::read_to_string(&pom).unwrap(), POM);
    }
}
