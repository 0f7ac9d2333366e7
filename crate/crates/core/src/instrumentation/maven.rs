//! Minimal-diff plugin insertion into pom.xml. The document is parsed only
//! to locate elements; edits are splices into the original text so every
//! byte outside the inserted block survives.

use roxmltree::Node;

use super::{Instrumented, ToolVersions};
use crate::context::maven::parse_document;

const JACOCO: (&str, &str) = ("org.jacoco", "jacoco-maven-plugin");
const PITEST: (&str, &str) = ("org.pitest", "pitest-maven");
const PITEST_JUNIT5: &str = "pitest-junit5-plugin";

fn element<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn text_of(node: Node<'_, '_>, name: &str) -> Option<String> {
    element(node, name)
        .and_then(|n| n.text())
        .map(|t| t.trim().to_string())
}

fn find_plugin<'a, 'i>(project: Node<'a, 'i>, (group, artifact): (&str, &str)) -> Option<Node<'a, 'i>> {
    let plugins = element(element(project, "build")?, "plugins")?;
    plugins.children().filter(|c| c.is_element()).find(|p| {
        text_of(*p, "artifactId").as_deref() == Some(artifact)
            && text_of(*p, "groupId").as_deref().unwrap_or(group) == group
    })
}

fn has_junit5_plugin(plugin: Node<'_, '_>) -> bool {
    plugin
        .descendants()
        .any(|n| n.is_element() && n.tag_name().name() == "artifactId" && n.text().map(str::trim) == Some(PITEST_JUNIT5))
}

pub(super) fn instrumentation(text: &str) -> Result<Instrumented, String> {
    let doc = parse_document(text)?;
    let project = doc.root_element();
    Ok(Instrumented {
        coverage: find_plugin(project, JACOCO).is_some(),
        mutation: find_plugin(project, PITEST).is_some(),
    })
}

/// Formatting conventions read off the document.
struct Style {
    unit: String,
    newline: &'static str,
}

impl Style {
    fn of(text: &str, project: Node<'_, '_>) -> Self {
        let newline = if text.contains("\r\n") { "\r\n" } else { "\n" };
        let unit = project
            .children()
            .find(|c| c.is_element())
            .map(|c| line_indent(text, c.range().start))
            .filter(|s| !s.is_empty())
            .map(|child| {
                let base = line_indent(text, project.range().start);
                child.strip_prefix(base.as_str()).unwrap_or(&child).to_string()
            })
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| "    ".to_string());
        Self { unit, newline }
    }

    fn render(&self, lines: &[(usize, String)], indent: &str) -> String {
        lines
            .iter()
            .map(|(depth, line)| format!("{indent}{}{line}", self.unit.repeat(*depth)))
            .collect::<Vec<_>>()
            .join(self.newline)
    }
}

/// Whitespace between the start of the line and `pos`, or empty when
/// something other than whitespace precedes `pos` on its line.
fn line_indent(text: &str, pos: usize) -> String {
    let line_start = text[..pos].rfind('\n').map_or(0, |i| i + 1);
    let prefix = &text[line_start..pos];
    if prefix.chars().all(|c| c == ' ' || c == '\t') {
        prefix.to_string()
    } else {
        String::new()
    }
}

/// Insert `block` as the last child of `parent`, indented like its
/// siblings (or one unit deeper than `parent` when it has none).
fn append_child(text: &str, parent: Node<'_, '_>, block: &[(usize, String)], style: &Style) -> String {
    let range = parent.range();
    let parent_indent = line_indent(text, range.start);
    let nl = style.newline;

    if let Some(last) = parent.children().filter(|c| c.is_element()).last() {
        let indent = line_indent(text, last.range().start);
        let indent = if indent.is_empty() {
            format!("{parent_indent}{}", style.unit)
        } else {
            indent
        };
        let at = last.range().end;
        return format!("{}{nl}{}{}", &text[..at], style.render(block, &indent), &text[at..]);
    }

    let child_indent = format!("{parent_indent}{}", style.unit);
    let rendered = style.render(block, &child_indent);
    let raw = &text[range.clone()];
    match raw.rfind("</") {
        Some(close) => {
            let close = range.start + close;
            let open_end = range.start + raw.find('>').map_or(0, |i| i + 1);
            let inner = &text[open_end..close];
            if inner.trim().is_empty() {
                format!("{}{nl}{rendered}{nl}{parent_indent}{}", &text[..open_end], &text[close..])
            } else {
                // Only comments or text inside: keep them, add after.
                format!("{}{nl}{rendered}{nl}{parent_indent}{}", text[..close].trim_end(), &text[close..])
            }
        }
        None => {
            // Self-closing <name/>.
            let name = parent.tag_name().name();
            let prefix = raw[1..].split(|c: char| c.is_whitespace() || c == '/' || c == '>').next().unwrap_or(name);
            format!(
                "{}<{prefix}>{nl}{rendered}{nl}{parent_indent}</{prefix}>{}",
                &text[..range.start],
                &text[range.end..]
            )
        }
    }
}

fn nest(depth: usize, lines: Vec<(usize, String)>) -> Vec<(usize, String)> {
    lines.into_iter().map(|(d, l)| (d + depth, l)).collect()
}

fn l(depth: usize, s: &str) -> (usize, String) {
    (depth, s.to_string())
}

fn jacoco_block(v: &ToolVersions) -> Vec<(usize, String)> {
    vec![
        l(0, "<plugin>"),
        l(1, "<groupId>org.jacoco</groupId>"),
        l(1, "<artifactId>jacoco-maven-plugin</artifactId>"),
        (1, format!("<version>{}</version>", v.jacoco)),
        l(1, "<executions>"),
        l(2, "<execution>"),
        l(3, "<id>prepare-agent</id>"),
        l(3, "<goals>"),
        l(4, "<goal>prepare-agent</goal>"),
        l(3, "</goals>"),
        l(2, "</execution>"),
        l(2, "<execution>"),
        l(3, "<id>report</id>"),
        l(3, "<phase>test</phase>"),
        l(3, "<goals>"),
        l(4, "<goal>report</goal>"),
        l(3, "</goals>"),
        l(3, "<configuration>"),
        l(4, "<formats>"),
        l(5, "<format>XML</format>"),
        l(4, "</formats>"),
        l(3, "</configuration>"),
        l(2, "</execution>"),
        l(1, "</executions>"),
        l(0, "</plugin>"),
    ]
}

fn pitest_block(v: &ToolVersions, junit5: bool) -> Vec<(usize, String)> {
    let mut lines = vec![
        l(0, "<plugin>"),
        l(1, "<groupId>org.pitest</groupId>"),
        l(1, "<artifactId>pitest-maven</artifactId>"),
        (1, format!("<version>{}</version>", v.pitest)),
    ];
    if junit5 {
        lines.extend([
            l(1, "<dependencies>"),
            l(2, "<dependency>"),
            l(3, "<groupId>org.pitest</groupId>"),
            (3, format!("<artifactId>{PITEST_JUNIT5}</artifactId>")),
            (3, format!("<version>{}</version>", v.pitest_junit5)),
            l(2, "</dependency>"),
            l(1, "</dependencies>"),
        ]);
    }
    lines.extend([
        l(1, "<configuration>"),
        l(2, "<outputFormats>"),
        l(3, "<outputFormat>XML</outputFormat>"),
        l(2, "</outputFormats>"),
        l(2, "<timestampedReports>false</timestampedReports>"),
        l(1, "</configuration>"),
        l(0, "</plugin>"),
    ]);
    lines
}

/// Add `plugin` under project/build/plugins, creating the missing
/// containers.
fn add_plugin(text: &str, plugin: Vec<(usize, String)>) -> Result<String, String> {
    let doc = parse_document(text)?;
    let project = doc.root_element();
    if project.tag_name().name() != "project" {
        return Err("root element is not <project>".to_string());
    }
    let style = Style::of(text, project);
    let out = match element(project, "build") {
        Some(build) => match element(build, "plugins") {
            Some(plugins) => append_child(text, plugins, &plugin, &style),
            None => {
                let mut block = vec![l(0, "<plugins>")];
                block.extend(nest(1, plugin));
                block.push(l(0, "</plugins>"));
                append_child(text, build, &block, &style)
            }
        },
        None => {
            let mut block = vec![l(0, "<build>"), l(1, "<plugins>")];
            block.extend(nest(2, plugin));
            block.extend([l(1, "</plugins>"), l(0, "</build>")]);
            append_child(text, project, &block, &style)
        }
    };
    Ok(out)
}

pub(super) fn inject_coverage(text: &str, versions: &ToolVersions) -> Result<Option<String>, String> {
    if instrumentation(text)?.coverage {
        return Ok(None);
    }
    add_plugin(text, jacoco_block(versions)).map(Some)
}

/// Returns the new text (None when already present) and warnings.
pub(super) fn inject_mutation(
    text: &str,
    junit5: bool,
    versions: &ToolVersions,
) -> Result<(Option<String>, Vec<String>), String> {
    let doc = parse_document(text)?;
    if let Some(existing) = find_plugin(doc.root_element(), PITEST) {
        let mut warnings = Vec::new();
        if junit5 && !has_junit5_plugin(existing) {
            warnings.push(format!(
                "existing pitest-maven plugin has no {PITEST_JUNIT5} dependency; left unchanged"
            ));
        }
        return Ok((None, warnings));
    }
    Ok((Some(add_plugin(text, pitest_block(versions, junit5))?), Vec::new()))
}
