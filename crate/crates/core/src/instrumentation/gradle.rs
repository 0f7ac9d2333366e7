//! Gradle script edits. Configuration blocks are appended at the end of
//! the script; the only in-place edit is adding the PITest plugin id to
//! the `plugins {}` block, which Gradle requires.

use std::sync::LazyLock;

use regex::Regex;

use super::{Instrumented, ToolVersions};

static JACOCO_APPLIED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?m)^[ \t]*(?:id\s*\(?\s*["']jacoco["']|apply\s*\(?\s*plugin\s*[:=]\s*["']jacoco["']|jacoco\s*$|`jacoco`)"#,
    )
    .unwrap()
});
static PITEST_APPLIED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"["']info\.solidsoft\.pitest["']"#).unwrap());
static PITEST_JUNIT5: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"pitest-junit5-plugin|junit5PluginVersion").unwrap());
static PLUGINS_BLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*plugins\s*\{").unwrap());
static BUILDSCRIPT_BLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*buildscript\s*\{").unwrap());

/// Byte offset just past the `}` matching the `{` at `open`, skipping
/// strings and comments.
fn matching_brace(text: &str, open: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut i = open;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => depth += 1,
            b'}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                i += 2;
                while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                    i += 1;
                }
                i += 1;
            }
            q @ (b'"' | b'\'') => {
                i += 1;
                while i < bytes.len() && bytes[i] != q {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn strip_line_comments(text: &str) -> String {
    text.lines()
        .map(|line| match line.find("//") {
            Some(i) if !line[..i].contains("://") => &line[..i],
            _ => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub(super) fn instrumentation(text: &str) -> Instrumented {
    let code = strip_line_comments(text);
    Instrumented {
        coverage: JACOCO_APPLIED.is_match(&code),
        mutation: PITEST_APPLIED.is_match(&code),
    }
}

fn newline(text: &str) -> &'static str {
    if text.contains("\r\n") {
        "\r\n"
    } else {
        "\n"
    }
}

/// `text` followed by `block`, separated by one blank line.
fn append(text: &str, block: &str) -> String {
    let nl = newline(text);
    let block = block.replace('\n', nl);
    let body = text.trim_end_matches(['\n', '\r']);
    if body.is_empty() {
        format!("{block}{nl}")
    } else {
        format!("{body}{nl}{nl}{block}{nl}")
    }
}

pub(super) fn inject_coverage(text: &str, kotlin: bool) -> Option<String> {
    if instrumentation(text).coverage {
        return None;
    }
    let block = if kotlin {
        "apply(plugin = \"jacoco\")\n\n\
         tasks.named<JacocoReport>(\"jacocoTestReport\") {\n    \
         dependsOn(tasks.named(\"test\"))\n    \
         reports {\n        xml.required.set(true)\n    }\n}\n\n\
         tasks.named(\"test\") {\n    finalizedBy(tasks.named(\"jacocoTestReport\"))\n}"
    } else {
        "apply plugin: 'jacoco'\n\n\
         jacocoTestReport {\n    \
         dependsOn test\n    \
         reports {\n        xml.required = true\n    }\n}\n\n\
         test {\n    finalizedBy jacocoTestReport\n}"
    };
    Some(append(text, block))
}

fn plugin_line(kotlin: bool, versions: &ToolVersions) -> String {
    if kotlin {
        format!("id(\"info.solidsoft.pitest\") version \"{}\"", versions.gradle_pitest)
    } else {
        format!("id 'info.solidsoft.pitest' version '{}'", versions.gradle_pitest)
    }
}

/// Add the PITest plugin id: into the first `plugins {}` block, else as a
/// new block after `buildscript {}`, else at the top of the script.
fn add_plugin_id(text: &str, kotlin: bool, versions: &ToolVersions) -> String {
    let nl = newline(text);
    let line = plugin_line(kotlin, versions);
    if let Some(m) = PLUGINS_BLOCK.find(text) {
        let open = m.end() - 1;
        if let Some(close_end) = matching_brace(text, open) {
            let close = close_end - 1;
            let inner = &text[open + 1..close];
            let indent = inner
                .lines()
                .find(|l| !l.trim().is_empty())
                .map(|l| l[..l.len() - l.trim_start().len()].to_string())
                .unwrap_or_else(|| "    ".to_string());
            let before_close = text[..close].trim_end_matches([' ', '\t']);
            if before_close.ends_with('\n') {
                return format!("{before_close}{indent}{line}{nl}{}", &text[close..]);
            }
            return format!("{before_close}{nl}{indent}{line}{nl}{}", &text[close..]);
        }
    }
    let block = format!("plugins {{{nl}    {line}{nl}}}");
    if let Some(m) = BUILDSCRIPT_BLOCK.find(text) {
        if let Some(end) = matching_brace(text, m.end() - 1) {
            return format!("{}{nl}{nl}{block}{}", &text[..end], &text[end..]);
        }
    }
    format!("{block}{nl}{nl}{text}")
}

pub(super) fn inject_mutation(
    text: &str,
    kotlin: bool,
    junit5: bool,
    versions: &ToolVersions,
) -> (Option<String>, Vec<String>) {
    if instrumentation(text).mutation {
        let mut warnings = Vec::new();
        if junit5 && !PITEST_JUNIT5.is_match(text) {
            warnings.push(
                "existing pitest configuration has no pitest-junit5-plugin; left unchanged"
                    .to_string(),
            );
        }
        return (None, warnings);
    }
    let with_plugin = add_plugin_id(text, kotlin, versions);
    let mut block = if kotlin {
        String::from(
            "pitest {\n    \
             (findProperty(\"pitestTargetClasses\") as String?)?.let { targetClasses.set(it.split(\",\")) }\n    \
             (findProperty(\"pitestTargetTests\") as String?)?.let { targetTests.set(it.split(\",\")) }\n    \
             outputFormats.set(listOf(\"XML\"))\n    \
             timestampedReports.set(false)\n}",
        )
    } else {
        String::from(
            "pitest {\n    \
             if (project.hasProperty('pitestTargetClasses')) {\n        \
             targetClasses = project.property('pitestTargetClasses').split(',') as List\n    }\n    \
             if (project.hasProperty('pitestTargetTests')) {\n        \
             targetTests = project.property('pitestTargetTests').split(',') as List\n    }\n    \
             outputFormats = ['XML']\n    \
             timestampedReports = false\n}",
        )
    };
    if junit5 {
        let dep = if kotlin {
            format!("    \"pitest\"(\"org.pitest:pitest-junit5-plugin:{}\")", versions.pitest_junit5)
        } else {
            format!("    pitest 'org.pitest:pitest-junit5-plugin:{}'", versions.pitest_junit5)
        };
        block.push_str(&format!("\n\ndependencies {{\n{dep}\n}}"));
    }
    (Some(append(&with_plugin, &block)), Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brace_matching_skips_strings_and_comments() {
        let t = "a { b '}' \"}\" // }\n /* } */ { } }x";
        assert_eq!(matching_brace(t, 2), Some(t.len() - 1));
    }

    #[test]
    fn detection_ignores_comments() {
        assert!(!instrumentation("// apply plugin: 'jacoco'\n").coverage);
        assert!(instrumentation("plugins {\n  id 'jacoco'\n}\n").coverage);
        assert!(instrumentation("plugins {\n    jacoco\n}\n").coverage);
        assert!(instrumentation("plugins { id(\"info.solidsoft.pitest\") version \"1\" }").mutation);
    }

    #[test]
    fn plugin_id_goes_into_existing_block() {
        let v = ToolVersions::default();
        let out = add_plugin_id("plugins {\n    id 'java'\n}\n", false, &v);
        assert_eq!(
            out,
            format!("plugins {{\n    id 'java'\n    id 'info.solidsoft.pitest' version '{}'\n}}\n", v.gradle_pitest)
        );
    }

    #[test]
    fn plugin_block_created_after_buildscript() {
        let v = ToolVersions::default();
        let out = add_plugin_id("buildscript {\n  repositories {}\n}\napply plugin: 'java'\n", false, &v);
        assert!(out.starts_with("buildscript {\n  repositories {}\n}\n\nplugins {\n"));
        assert!(out.ends_with("}\napply plugin: 'java'\n"));
    }
}
