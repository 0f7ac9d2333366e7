//! Line-oriented manifest: one JSON object per line. A manifest is a
//! `snapshot` record, its `pair` records in focal-path order, and a closing
//! `stats` record. A corpus file is any number of manifests back to back.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CommitHash, CorpusError, CorpusManifest, CorpusStats, FocalPair, RepositorySnapshot};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("manifest line {line}, column {column}: {message}")]
pub struct ManifestParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ManifestParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case", deny_unknown_fields)]
enum Record {
    Snapshot {
        schema_version: u32,
        repo_id: String,
        url: String,
        branch: String,
        commit_hash: CommitHash,
        local_path: PathBuf,
    },
    Pair(FocalPair),
    Stats(CorpusStats),
}

fn push_record(out: &mut String, record: &Record) {
    let line = serde_json::to_string(record).expect("manifest records always serialize");
    let _ = writeln!(out, "{line}");
}

pub fn render_manifest(manifest: &CorpusManifest) -> String {
    let mut out = String::new();
    let s = &manifest.snapshot;
    push_record(
        &mut out,
        &Record::Snapshot {
            schema_version: manifest.schema_version,
            repo_id: s.repo_id.clone(),
            url: s.url.clone(),
            branch: s.branch.clone(),
            commit_hash: s.commit_hash.clone(),
            local_path: s.local_path.clone(),
        },
    );
    let mut pairs: Vec<&FocalPair> = manifest.pairs.iter().collect();
    pairs.sort_by(|a, b| a.focal_path.cmp(&b.focal_path));
    for pair in pairs {
        push_record(&mut out, &Record::Pair(pair.clone()));
    }
    push_record(&mut out, &Record::Stats(manifest.stats));
    out
}

/// Parse a file holding any number of manifests.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusManifest>, ManifestParseError> {
    let mut done = Vec::new();
    let mut open: Option<(CorpusManifest, usize)> = None;
    let mut line_count = 0;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        line_count = line_no;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(line)
            .map_err(|e| ManifestParseError::new(line_no, e.column(), e.to_string()))?;
        match record {
            Record::Snapshot {
                schema_version,
                repo_id,
                url,
                branch,
                commit_hash,
                local_path,
            } => {
                if let Some((_, started)) = open {
                    return Err(ManifestParseError::new(
                        line_no,
                        1,
                        format!("manifest started on line {started} has no stats record"),
                    ));
                }
                if schema_version != SCHEMA_VERSION {
                    return Err(ManifestParseError::new(
                        line_no,
                        1,
                        format!("unsupported schema_version {schema_version}"),
                    ));
                }
                let manifest = CorpusManifest {
                    snapshot: RepositorySnapshot {
                        repo_id,
                        url,
                        branch,
                        commit_hash,
                        local_path,
                    },
                    pairs: Vec::new(),
                    stats: CorpusStats::default(),
                    schema_version,
                };
                open = Some((manifest, line_no));
            }
            Record::Pair(pair) => {
                let Some((manifest, _)) = open.as_mut() else {
                    return Err(ManifestParseError::new(line_no, 1, "pair record before snapshot"));
                };
                if manifest
                    .pairs
                    .last()
                    .is_some_and(|prev| prev.focal_path >= pair.focal_path)
                {
                    return Err(ManifestParseError::new(
                        line_no,
                        1,
                        "pairs are not in strictly increasing focal_path order",
                    ));
                }
                manifest.pairs.push(pair);
            }
            Record::Stats(stats) => {
                let Some((mut manifest, _)) = open.take() else {
                    return Err(ManifestParseError::new(line_no, 1, "stats record before snapshot"));
                };
                let with_tests = manifest.pairs.iter().filter(|p| p.test_path.is_some()).count();
                if stats.test_class_count != with_tests as u64 {
                    return Err(ManifestParseError::new(
                        line_no,
                        1,
                        format!(
                            "test_class_count {} disagrees with {with_tests} pairs that have tests",
                            stats.test_class_count
                        ),
                    ));
                }
                manifest.stats = stats;
                done.push(manifest);
            }
        }
    }
    if let Some((_, started)) = open {
        return Err(ManifestParseError::new(
            line_count + 1,
            1,
            format!("truncated: manifest started on line {started} has no stats record"),
        ));
    }
    Ok(done)
}

/// Parse a file holding exactly one manifest.
pub fn parse_manifest(text: &str) -> Result<CorpusManifest, ManifestParseError> {
    let mut all = parse_corpus(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        n => Err(ManifestParseError::new(1, 1, format!("expected one manifest, found {n}"))),
    }
}

fn check_paths(manifest: &CorpusManifest) -> Result<(), CorpusError> {
    let root = &manifest.snapshot.local_path;
    for pair in &manifest.pairs {
        for rel in std::iter::once(&pair.focal_path).chain(pair.test_path.as_ref()) {
            let path = root.join(rel);
            if !path.exists() {
                return Err(CorpusError::MissingPath(path));
            }
        }
    }
    Ok(())
}

pub fn write_manifest(manifest: &CorpusManifest, path: &Path) -> Result<(), CorpusError> {
    write_corpus(std::slice::from_ref(manifest), path)
}

pub fn write_corpus(manifests: &[CorpusManifest], path: &Path) -> Result<(), CorpusError> {
    let mut out = String::new();
    for manifest in manifests {
        check_paths(manifest)?;
        out.push_str(&render_manifest(manifest));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<CorpusManifest, CorpusError> {
    Ok(parse_manifest(&std::fs::read_to_string(path)?)?)
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusManifest>, CorpusError> {
    Ok(parse_corpus(&std::fs::read_to_string(path)?)?)
}
