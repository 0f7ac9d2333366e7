//! Line-level extraction from Groovy and Kotlin Gradle scripts. Nothing
//! is evaluated; only declarative lines are matched.

use std::sync::LazyLock;

use regex::Regex;

use super::{normalize_java_version, strongest, BuildFacts, Framework, FrameworkFacts};

static SOURCE_COMPAT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?m)\bsourceCompatibility\s*(?:=|\.set\()?\s*(?:JavaVersion\.toVersion\()?\s*['"]?((?:JavaVersion\.VERSION_)?[0-9][0-9._]*)"#)
        .unwrap()
});
static TARGET_COMPAT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?m)\btargetCompatibility\s*(?:=|\.set\()?\s*['"]?((?:JavaVersion\.VERSION_)?[0-9][0-9._]*)"#)
        .unwrap()
});
static TOOLCHAIN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"JavaLanguageVersion\.of\(\s*['"]?(\d+)"#).unwrap());
static STRING_COORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"['"]([A-Za-z0-9_.\-]+):([A-Za-z0-9_.\-]+)(?::([^'":@]+))?(?:@[^'"]*)?['"]"#).unwrap()
});
static MAP_COORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"group\s*[:=]\s*['"]([^'"]+)['"]\s*,\s*name\s*[:=]\s*['"]([^'"]+)['"](?:\s*,\s*version\s*[:=]\s*['"]([^'"]+)['"])?"#)
        .unwrap()
});
static PLATFORM_BOM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"platform\(\s*['"]org\.junit:junit-bom:([^'"]+)['"]"#).unwrap()
});

fn without_line_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("//"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Expand a `$name` / `${name}` version from a `name = '...'` assignment
/// elsewhere in the script.
fn resolve_variable(version: &str, text: &str) -> Option<String> {
    let name = version
        .strip_prefix("${")
        .and_then(|v| v.strip_suffix('}'))
        .or_else(|| version.strip_prefix('$'))?;
    let name = name.strip_prefix("project.").unwrap_or(name);
    let pattern = format!(r#"\b{}\s*=\s*['"]([^'"$]+)['"]"#, regex::escape(name));
    Regex::new(&pattern)
        .ok()?
        .captures(text)
        .map(|c| c[1].to_string())
}

fn version_of(raw: Option<&str>, text: &str) -> Option<String> {
    let raw = raw?.trim();
    if raw.contains('$') {
        resolve_variable(raw, text)
    } else if raw.is_empty() {
        None
    } else {
        Some(raw.to_string())
    }
}

pub fn script_facts(text: &str) -> BuildFacts {
    let text = without_line_comments(text);

    let java_version = [&*SOURCE_COMPAT, &*TOOLCHAIN, &*TARGET_COMPAT]
        .iter()
        .find_map(|re| re.captures(&text).and_then(|c| normalize_java_version(&c[1])));

    let bom = PLATFORM_BOM.captures(&text).map(|c| c[1].to_string());
    let mut hits = Vec::new();
    for re in [&*STRING_COORD, &*MAP_COORD] {
        for caps in re.captures_iter(&text) {
            let Some(framework) = Framework::from_coordinate(&caps[1], &caps[2]) else {
                continue;
            };
            let mut version = version_of(caps.get(3).map(|m| m.as_str()), &text);
            if version.is_none() && framework == Framework::JUnit5 {
                version = bom.clone();
            }
            hits.push(FrameworkFacts { framework, version });
        }
    }

    BuildFacts {
        java_version,
        framework: strongest(hits),
    }
}
