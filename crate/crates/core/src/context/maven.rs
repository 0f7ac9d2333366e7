use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use roxmltree::{Document, Node, ParsingOptions};

use super::{normalize_java_version, read_build_file, strongest, BuildFacts, ContextError, Framework, FrameworkFacts};

const MAX_PARENT_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Coordinate {
    group: String,
    artifact: String,
    version: Option<String>,
}

/// The pieces of one pom.xml that matter here, unresolved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct PomInfo {
    properties: BTreeMap<String, String>,
    java_candidates: Vec<String>,
    dependencies: Vec<Coordinate>,
    managed: Vec<Coordinate>,
    parent_path: Option<String>,
}

pub(crate) fn parse_document(text: &str) -> Result<Document<'_>, String> {
    let options = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    Document::parse_with_options(text, options).map_err(|e| e.to_string())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn children<'a, 'i>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == name)
}

fn text_of(node: Node<'_, '_>, name: &str) -> Option<String> {
    child(node, name)
        .and_then(|n| n.text())
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
}

fn coordinates(list: Option<Node<'_, '_>>) -> Vec<Coordinate> {
    let Some(list) = list else { return Vec::new() };
    children(list, "dependency")
        .filter_map(|dep| {
            Some(Coordinate {
                group: text_of(dep, "groupId")?,
                artifact: text_of(dep, "artifactId")?,
                version: text_of(dep, "version"),
            })
        })
        .collect()
}

fn parse_pom(text: &str) -> Result<PomInfo, String> {
    let doc = parse_document(text)?;
    let project = doc.root_element();
    if project.tag_name().name() != "project" {
        return Err(format!("root element is <{}>, expected <project>", project.tag_name().name()));
    }
    let mut info = PomInfo::default();

    if let Some(props) = child(project, "properties") {
        for p in props.children().filter(|c| c.is_element()) {
            let value = p.text().unwrap_or("").trim().to_string();
            info.properties.insert(p.tag_name().name().to_string(), value);
        }
    }
    for key in ["maven.compiler.source", "maven.compiler.release"] {
        if let Some(v) = info.properties.get(key) {
            info.java_candidates.push(v.clone());
        }
    }
    if let Some(build) = child(project, "build") {
        let plugin_lists = [
            child(build, "plugins"),
            child(build, "pluginManagement").and_then(|pm| child(pm, "plugins")),
        ];
        for plugins in plugin_lists.into_iter().flatten() {
            for plugin in children(plugins, "plugin") {
                if text_of(plugin, "artifactId").as_deref() != Some("maven-compiler-plugin") {
                    continue;
                }
                if let Some(config) = child(plugin, "configuration") {
                    for key in ["source", "release"] {
                        if let Some(v) = text_of(config, key) {
                            info.java_candidates.push(v);
                        }
                    }
                }
            }
        }
    }

    info.dependencies = coordinates(child(project, "dependencies"));
    info.managed = coordinates(
        child(project, "dependencyManagement").and_then(|dm| child(dm, "dependencies")),
    );
    if let Some(parent) = child(project, "parent") {
        info.parent_path = Some(text_of(parent, "relativePath").unwrap_or_else(|| "../pom.xml".to_string()));
    }
    Ok(info)
}

/// Expand `${name}` references; unknown names are left in place.
fn resolve(value: &str, props: &BTreeMap<String, String>) -> String {
    let mut current = value.to_string();
    for _ in 0..MAX_PARENT_DEPTH {
        let mut out = String::with_capacity(current.len());
        let mut rest = current.as_str();
        let mut changed = false;
        while let Some(start) = rest.find("${") {
            out.push_str(&rest[..start]);
            let after = &rest[start + 2..];
            match after.find('}') {
                Some(end) => {
                    let key = &after[..end];
                    match props.get(key) {
                        Some(v) => {
                            out.push_str(v);
                            changed = true;
                        }
                        None => out.push_str(&rest[start..start + 3 + end]),
                    }
                    rest = &after[end + 1..];
                }
                None => {
                    out.push_str(&rest[start..]);
                    rest = "";
                }
            }
        }
        out.push_str(rest);
        current = out;
        if !changed {
            break;
        }
    }
    current
}

fn facts_from_chain(chain: &[PomInfo]) -> BuildFacts {
    // Child properties override inherited ones.
    let mut props = BTreeMap::new();
    for info in chain.iter().rev() {
        props.extend(info.properties.clone());
    }

    let java_version = chain
        .iter()
        .flat_map(|info| info.java_candidates.iter())
        .find_map(|raw| normalize_java_version(&resolve(raw, &props)));

    let managed: Vec<&Coordinate> = chain.iter().flat_map(|i| i.managed.iter()).collect();
    let hits = chain
        .iter()
        .flat_map(|i| i.dependencies.iter())
        .filter_map(|dep| {
            let framework = Framework::from_coordinate(&dep.group, &dep.artifact)?;
            let version = dep
                .version
                .clone()
                .or_else(|| {
                    managed
                        .iter()
                        .find(|m| {
                            (m.group == dep.group && m.artifact == dep.artifact)
                                || (framework == Framework::JUnit5
                                    && m.group == "org.junit"
                                    && m.artifact == "junit-bom")
                        })
                        .and_then(|m| m.version.clone())
                })
                .map(|v| resolve(&v, &props))
                .filter(|v| !v.contains("${"));
            Some(FrameworkFacts { framework, version })
        });

    BuildFacts {
        java_version,
        framework: strongest(hits),
    }
}

/// Facts from a single pom document, without parent inheritance.
pub fn pom_facts(text: &str) -> Result<BuildFacts, String> {
    Ok(facts_from_chain(&[parse_pom(text)?]))
}

/// Facts from `path`, inheriting properties, compiler settings and
/// dependencies from parent poms reachable through `relativePath`.
pub fn resolve_pom(path: &Path) -> Result<BuildFacts, ContextError> {
    let mut chain = Vec::new();
    let mut current: PathBuf = path.to_path_buf();
    loop {
        let text = read_build_file(&current)?;
        let info = parse_pom(&text).map_err(|message| ContextError::BuildFile {
            path: current.clone(),
            message,
        })?;
        let parent = info.parent_path.clone();
        chain.push(info);
        let Some(rel) = parent else { break };
        if chain.len() >= MAX_PARENT_DEPTH {
            break;
        }
        let mut next = current.parent().unwrap_or(Path::new(".")).join(rel);
        if next.is_dir() {
            next = next.join("pom.xml");
        }
        // Parents outside the checkout (published artifacts) are not resolved.
        if !next.is_file() {
            break;
        }
        current = next;
    }
    Ok(facts_from_chain(&chain))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pom(props: &str, deps: &str) -> String {
        format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<project xmlns="http://maven.apache.org/POM/4.0.0">
  <modelVersion>4.0.0</modelVersion>
  <groupId>com.a</groupId><artifactId>a</artifactId><version>1</version>
  <properties>{props}</properties>
  <dependencies>{deps}</dependencies>
</project>"#
        )
    }

    const JUNIT4: &str = "<dependency><groupId>junit</groupId><artifactId>junit</artifactId><version>4.13.2</version><scope>test</scope></dependency>";
    const JUPITER: &str = "<dependency><groupId>org.junit.jupiter</groupId><artifactId>junit-jupiter</artifactId><version>5.10.0</version></dependency>";

    #[test]
    fn junit4_with_source_property() {
        let facts = pom_facts(&pom("<maven.compiler.source>11</maven.compiler.source>", JUNIT4)).unwrap();
        assert_eq!(facts.java_version.as_deref(), Some("11"));
        assert_eq!(facts.framework.framework, Framework::JUnit4);
        assert_eq!(facts.framework.version.as_deref(), Some("4.13.2"));
    }

    #[test]
    fn jupiter_wins_over_vintage() {
        let facts = pom_facts(&pom("", &format!("{JUNIT4}{JUPITER}"))).unwrap();
        assert_eq!(facts.framework.framework, Framework::JUnit5);
        assert_eq!(facts.framework.version.as_deref(), Some("5.10.0"));
    }

    #[test]
    fn testng_and_unknown() {
        let testng = "<dependency><groupId>org.testng</groupId><artifactId>testng</artifactId><version>7.8.0</version></dependency>";
        assert_eq!(pom_facts(&pom("", testng)).unwrap().framework.framework, Framework::TestNG);
        let other = "<dependency><groupId>org.assertj</groupId><artifactId>assertj-core</artifactId></dependency>";
        let facts = pom_facts(&pom("", other)).unwrap();
        assert_eq!(facts.framework.framework, Framework::Unknown);
        assert_eq!(facts.java_version, None);
    }

    #[test]
    fn property_references_resolve() {
        let facts = pom_facts(&pom(
            "<java.version>17</java.version><maven.compiler.release>${java.version}</maven.compiler.release><junit.version>4.12</junit.version>",
            "<dependency><groupId>junit</groupId><artifactId>junit</artifactId><version>${junit.version}</version></dependency>",
        ))
        .unwrap();
        assert_eq!(facts.java_version.as_deref(), Some("17"));
        assert_eq!(facts.framework.version.as_deref(), Some("4.12"));
    }

    #[test]
    fn compiler_plugin_configuration() {
        let text = r#"<project><build><plugins><plugin>
            <groupId>org.apache.maven.plugins</groupId><artifactId>maven-compiler-plugin</artifactId>
            <configuration><source>1.8</source><target>1.8</target></configuration>
        </plugin></plugins></build></project>"#;
        assert_eq!(pom_facts(text).unwrap().java_version.as_deref(), Some("8"));
    }

    #[test]
    fn bom_supplies_jupiter_version() {
        let text = r#"<project>
          <dependencyManagement><dependencies><dependency>
            <groupId>org.junit</groupId><artifactId>junit-bom</artifactId><version>5.9.3</version><type>pom</type><scope>import</scope>
          </dependency></dependencies></dependencyManagement>
          <dependencies><dependency><groupId>org.junit.jupiter</groupId><artifactId>junit-jupiter</artifactId></dependency></dependencies>
        </project>"#;
        let facts = pom_facts(text).unwrap();
        assert_eq!(facts.framework.framework, Framework::JUnit5);
        assert_eq!(facts.framework.version.as_deref(), Some("5.9.3"));
    }

    #[test]
    fn malformed_pom_is_an_error() {
        assert!(pom_facts("<project><properties>").is_err());
        assert!(pom_facts("<notaproject/>").is_err());
    }

    #[test]
    fn parent_supplies_java_version() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("pom.xml"),
            pom("<maven.compiler.source>17</maven.compiler.source>", ""),
        )
        .unwrap();
        let module = dir.path().join("core");
        std::fs::create_dir(&module).unwrap();
        std::fs::write(
            module.join("pom.xml"),
            format!("<project><parent><groupId>com.a</groupId><artifactId>a</artifactId></parent><dependencies>{JUNIT4}</dependencies></project>"),
        )
        .unwrap();
        let facts = resolve_pom(&module.join("pom.xml")).unwrap();
        assert_eq!(facts.java_version.as_deref(), Some("17"));
        assert_eq!(facts.framework.framework, Framework::JUnit4);
    }
}
