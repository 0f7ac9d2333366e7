use std::path::PathBuf;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileError {
    pub file: PathBuf,
    pub message: String,
}

// [ERROR] /p/src/test/java/a/FooTest.java:[12,5] cannot find symbol
static MAVEN_COMPILE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\[ERROR\]\s+(?:file://)?(\S.*?\.java):\[(\d+)(?:,\d+)?\]\s*(.*)$").unwrap()
});
// /p/src/test/java/a/FooTest.java:12: error: cannot find symbol
static JAVAC_COMPILE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:\[ERROR\]\s+)?(\S.*?\.java):(\d+):\s*error:\s*(.*)$").unwrap()
});
// Tests run: 2, Failures: 1, ... <<< FAILURE! -- in a.FooTest
static SUREFIRE_CLASS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"<<< (?:FAILURE|ERROR)!\s*(?:-{1,2}\s*)?in\s+([\w.$]+)").unwrap()
});
// a.FooTest > adds() FAILED
static GRADLE_FAILED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([\w.$]+) > .+ FAILED\s*$").unwrap());

/// Strip ANSI colour escapes that some tools emit even in batch mode.
fn plain(line: &str) -> std::borrow::Cow<'_, str> {
    static ANSI: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\x1b\[[0-9;]*m").unwrap());
    ANSI.replace_all(line, "")
}

/// Compile errors (file, message) and failing test classes named in a
/// Maven or Gradle build log. Both lists are deduplicated in first-seen
/// order.
pub fn parse_build_log(log: &str) -> (Vec<CompileError>, Vec<String>) {
    let mut errors: Vec<CompileError> = Vec::new();
    let mut failing: Vec<String> = Vec::new();
    for raw in log.lines() {
        let line = plain(raw);
        let line = line.trim_end();
        let compile = MAVEN_COMPILE
            .captures(line)
            .or_else(|| JAVAC_COMPILE.captures(line));
        if let Some(c) = compile {
            let err = CompileError {
                file: PathBuf::from(&c[1]),
                message: format!("line {}: {}", &c[2], c[3].trim()),
            };
            if !errors.contains(&err) {
                errors.push(err);
            }
            continue;
        }
        let class = SUREFIRE_CLASS
            .captures(line)
            .or_else(|| GRADLE_FAILED.captures(line.trim_start()))
            .map(|c| c[1].to_string());
        if let Some(class) = class {
            if !failing.contains(&class) {
                failing.push(class);
            }
        }
    }
    (errors, failing)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maven_log() {
        let log = "\
[INFO] Compiling 3 source files
[ERROR] COMPILATION ERROR :
[ERROR] /w/p/src/test/java/a/BTest.java:[7,9] cannot find symbol
  symbol:   class Nope
[ERROR] /w/p/src/test/java/a/BTest.java:[7,9] cannot find symbol
[ERROR] Tests run: 2, Failures: 1, Errors: 0, Skipped: 0, Time elapsed: 0.02 s <<< FAILURE! -- in a.CTest
[ERROR] Tests run: 1, Failures: 0, Errors: 1, Skipped: 0, Time elapsed: 0.1 s <<< ERROR! - in a.DTest
";
        let (errors, failing) = parse_build_log(log);
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].file, PathBuf::from("/w/p/src/test/java/a/BTest.java"));
        assert_eq!(errors[0].message, "line 7: cannot find symbol");
        assert_eq!(failing, vec!["a.CTest", "a.DTest"]);
    }

    #[test]
    fn gradle_log() {
        let log = "\
> Task :compileTestJava FAILED
/w/p/src/test/java/a/BTest.java:7: error: ';' expected
\x1b[31ma.CTest > adds() FAILED\x1b[0m
    org.opentest4j.AssertionFailedError at CTest.java:12
";
        let (errors, failing) = parse_build_log(log);
        assert_eq!(errors[0].file, PathBuf::from("/w/p/src/test/java/a/BTest.java"));
        assert_eq!(failing, vec!["a.CTest"]);
    }

    #[test]
    fn clean_log() {
        assert_eq!(parse_build_log("[INFO] BUILD SUCCESS\n"), (vec![], vec![]));
    }
}
