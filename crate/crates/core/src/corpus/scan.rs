use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use super::{CorpusStats, FocalPair};
use crate::java::{count_loc, JavaSource};

const SKIP_DIRS: &[&str] = &[".git", "target", "build", "node_modules", ".gradle", ".idea"];

/// Result of scanning one repository tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scan {
    pub pairs: Vec<FocalPair>,
    pub warnings: Vec<String>,
}

fn rel_string(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Every `<module>/src/main/java` directory under `root`, sorted.
fn main_source_roots(root: &Path) -> Vec<PathBuf> {
    let mut roots: Vec<PathBuf> = WalkDir::new(root)
        .follow_links(false)
        .into_iter()
        .filter_entry(|e| {
            e.depth() == 0
                || !(e.file_type().is_dir()
                    && SKIP_DIRS.contains(&e.file_name().to_string_lossy().as_ref()))
        })
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_dir() && e.path().ends_with("src/main/java"))
        .map(|e| e.into_path())
        .collect();
    roots.sort();
    roots
}

fn java_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            p.extension().is_some_and(|x| x == "java")
                && !matches!(
                    p.file_name().and_then(|n| n.to_str()),
                    Some("package-info.java" | "module-info.java")
                )
        })
        .collect();
    files.sort();
    files
}

fn qualify(package: &str, name: &str) -> String {
    if package.is_empty() {
        name.to_string()
    } else {
        format!("{package}.{name}")
    }
}

/// Map production classes to their tests: a test file matches when it sits
/// in the mirrored package directory under `src/test/java` and its
/// top-level type is named `<Focal>Test` or `Test<Focal>`.
pub fn scan_repository(root: &Path) -> Scan {
    let mut scan = Scan::default();
    for main_root in main_source_roots(root) {
        let module = main_root
            .parent()
            .and_then(Path::parent)
            .and_then(Path::parent)
            .unwrap_or(root);
        let test_root = module.join("src/test/java");

        for focal in java_files(&main_root) {
            let text = match std::fs::read_to_string(&focal) {
                Ok(t) => t,
                Err(e) => {
                    scan.warnings.push(format!("{}: {e}", focal.display()));
                    continue;
                }
            };
            let parsed = match JavaSource::parse_strict(text) {
                Ok(p) => p,
                Err(e) => {
                    scan.warnings.push(format!("{}: skipped, {e}", focal.display()));
                    continue;
                }
            };
            let Some(stem) = focal.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let rel_dir = focal
                .parent()
                .and_then(|p| p.strip_prefix(&main_root).ok())
                .unwrap_or(Path::new(""));
            let package = parsed
                .package()
                .unwrap_or_else(|| rel_string(Path::new(""), rel_dir).replace('/', "."));

            let mut pair = FocalPair {
                focal_path: rel_string(root, &focal),
                focal_fqn: qualify(&package, stem),
                test_path: None,
                test_fqn: None,
                package: package.clone(),
            };

            let test_dir = test_root.join(rel_dir);
            for candidate in [format!("{stem}Test"), format!("Test{stem}")] {
                let path = test_dir.join(format!("{candidate}.java"));
                if !path.is_file() {
                    continue;
                }
                let Ok(test_text) = std::fs::read_to_string(&path) else {
                    scan.warnings.push(format!("{}: unreadable", path.display()));
                    continue;
                };
                let test = JavaSource::parse(test_text);
                if test.has_errors() {
                    scan.warnings
                        .push(format!("{}: unparseable test class", path.display()));
                }
                if test.top_level_types().iter().any(|t| t.name == candidate) {
                    let test_package = test.package().unwrap_or_else(|| package.clone());
                    pair.test_path = Some(rel_string(root, &path));
                    pair.test_fqn = Some(qualify(&test_package, &candidate));
                    break;
                }
            }
            scan.pairs.push(pair);
        }
    }
    scan.pairs.sort_by(|a, b| a.focal_path.cmp(&b.focal_path));
    scan
}

/// LOC (non-blank lines) and cyclomatic complexity over every focal and
/// test file of `pairs`. Unparseable files contribute LOC only.
pub fn corpus_stats(pairs: &[FocalPair], root: &Path) -> (CorpusStats, Vec<String>) {
    let mut stats = CorpusStats::default();
    let mut warnings = Vec::new();
    for pair in pairs {
        if pair.test_path.is_some() {
            stats.test_class_count += 1;
        }
        for rel in std::iter::once(&pair.focal_path).chain(pair.test_path.as_ref()) {
            let path = root.join(rel);
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    warnings.push(format!("{}: {e}", path.display()));
                    continue;
                }
            };
            stats.loc_total += count_loc(&text);
            let parsed = JavaSource::parse(text);
            if parsed.has_errors() {
                warnings.push(format!("{}: unparseable, complexity not counted", path.display()));
            } else {
                stats.cyclomatic_total += parsed.cyclomatic_total();
            }
        }
    }
    (stats, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(root: &Path, rel: &str, text: &str) {
        let path = root.join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn suffix_match() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "src/main/java/com/a/Foo.java", "package com.a; public class Foo {}");
        write(dir.path(), "src/test/java/com/a/FooTest.java", "package com.a; public class FooTest {}");
        let scan = scan_repository(dir.path());
        assert_eq!(scan.pairs.len(), 1);
        let pair = &scan.pairs[0];
        assert_eq!(pair.focal_fqn, "com.a.Foo");
        assert_eq!(pair.test_path.as_deref(), Some("src/test/java/com/a/FooTest.java"));
        assert_eq!(pair.test_fqn.as_deref(), Some("com.a.FooTest"));
    }

    #[test]
    fn prefix_match_and_missing_test() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "src/main/java/com/a/Bar.java", "package com.a; class Bar {}");
        write(dir.path(), "src/main/java/com/a/Baz.java", "package com.a; class Baz {}");
        write(dir.path(), "src/test/java/com/a/TestBaz.java", "package com.a; class TestBaz {}");
        let scan = scan_repository(dir.path());
        assert_eq!(scan.pairs.len(), 2);
        assert_eq!(scan.pairs[0].test_path, None);
        assert_eq!(scan.pairs[1].test_fqn.as_deref(), Some("com.a.TestBaz"));
    }

    #[test]
    fn test_in_other_package_does_not_match() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "src/main/java/com/a/Foo.java", "package com.a; class Foo {}");
        write(dir.path(), "src/test/java/com/b/FooTest.java", "package com.b; class FooTest {}");
        let scan = scan_repository(dir.path());
        assert_eq!(scan.pairs[0].test_path, None);
    }

    #[test]
    fn misnamed_type_in_test_file_does_not_match() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "src/main/java/Foo.java", "class Foo {}");
        write(dir.path(), "src/test/java/FooTest.java", "class SomethingElse {}");
        let scan = scan_repository(dir.path());
        assert_eq!(scan.pairs[0].focal_fqn, "Foo");
        assert_eq!(scan.pairs[0].test_path, None);
    }

    #[test]
    fn unparseable_focal_is_skipped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "src/main/java/Ok.java", "class Ok {}");
        write(dir.path(), "src/main/java/Broken.java", "class Broken { void m( }");
        let scan = scan_repository(dir.path());
        assert_eq!(scan.pairs.len(), 1);
        assert_eq!(scan.warnings.len(), 1);
        assert!(scan.warnings[0].contains("Broken.java"));
    }

    #[test]
    fn empty_pairs_give_zero_stats() {
        let (stats, warnings) = corpus_stats(&[], Path::new("/nonexistent"));
        assert_eq!(stats, CorpusStats::default());
        assert!(warnings.is_empty());
    }

    #[test]
    fn unparseable_file_counts_loc_only() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "src/main/java/B.java", "class B {\n  void m( {\n}\n");
        let pair = FocalPair {
            focal_path: "src/main/java/B.java".into(),
            focal_fqn: "B".into(),
            test_path: None,
            test_fqn: None,
            package: String::new(),
        };
        let (stats, warnings) = corpus_stats(&[pair], dir.path());
        assert_eq!(stats.loc_total, 3);
        assert_eq!(stats.cyclomatic_total, 0);
        assert_eq!(warnings.len(), 1);
    }
}
