//! Focal-class / test-class corpus: pinned repository snapshots, the
//! package-mirror mapping between production and test classes, and
//! LOC / cyclomatic-complexity totals.

mod manifest;
mod scan;
mod snapshot;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use manifest::{
    parse_corpus, parse_manifest, read_corpus, read_manifest, render_manifest, write_corpus,
    write_manifest, ManifestParseError, SCHEMA_VERSION,
};
pub use scan::{corpus_stats, scan_repository, Scan};
pub use snapshot::{ingest_local, snapshot_repository, CommitHash};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("clone of {url} failed: {message}")]
    Clone { url: String, message: String },
    #[error("branch {branch:?} not found in {url}")]
    BranchNotFound { url: String, branch: String },
    #[error("git {args}: {message}")]
    Git { args: String, message: String },
    #[error("{0} is not a git work tree")]
    NotARepository(PathBuf),
    #[error("invalid commit hash {0:?}")]
    InvalidCommitHash(String),
    #[error("manifest path {0} does not exist")]
    MissingPath(PathBuf),
    #[error(transparent)]
    Manifest(#[from] ManifestParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepositorySnapshot {
    pub repo_id: String,
    pub url: String,
    pub branch: String,
    pub commit_hash: CommitHash,
    pub local_path: PathBuf,
}

/// One production class and, when the naming convention finds one, its
/// human-written test class. Paths are relative to the repository root and
/// use `/` separators.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FocalPair {
    pub focal_path: String,
    pub focal_fqn: String,
    pub test_path: Option<String>,
    pub test_fqn: Option<String>,
    pub package: String,
}

impl FocalPair {
    pub fn simple_name(&self) -> &str {
        self.focal_fqn
            .rsplit_once('.')
            .map_or(self.focal_fqn.as_str(), |(_, name)| name)
    }

    /// Path prefix of the module holding the focal class, e.g. `core/`
    /// for `core/src/main/java/a/B.java`; empty for a single-module build.
    pub fn module_prefix(&self) -> &str {
        self.focal_path
            .find("src/main/java/")
            .map_or("", |idx| &self.focal_path[..idx])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub test_class_count: u64,
    pub loc_total: u64,
    pub cyclomatic_total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    pub snapshot: RepositorySnapshot,
    pub pairs: Vec<FocalPair>,
    pub stats: CorpusStats,
    pub schema_version: u32,
}

impl CorpusManifest {
    pub fn new(snapshot: RepositorySnapshot, mut pairs: Vec<FocalPair>, stats: CorpusStats) -> Self {
        pairs.sort_by(|a, b| a.focal_path.cmp(&b.focal_path));
        Self {
            snapshot,
            pairs,
            stats,
            schema_version: SCHEMA_VERSION,
        }
    }
}

/// Scan a snapshot's work tree and total its statistics. Warnings from
/// unparseable files are returned alongside.
pub fn build_manifest(snapshot: RepositorySnapshot) -> (CorpusManifest, Vec<String>) {
    let Scan { pairs, mut warnings } = scan_repository(&snapshot.local_path);
    let (stats, stat_warnings) = corpus_stats(&pairs, &snapshot.local_path);
    warnings.extend(stat_warnings);
    (CorpusManifest::new(snapshot, pairs, stats), warnings)
}

/// One line of a repository list: a clone URL (or path) with an optional
/// branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoSource {
    pub location: String,
    pub branch: Option<String>,
}

/// Parse a repository list: one `<url-or-path> [branch]` per line, blank
/// lines and `#` comments ignored.
pub fn parse_repo_list(text: &str) -> Vec<RepoSource> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or_default().trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut parts = l.split_whitespace();
            RepoSource {
                location: parts.next().unwrap_or_default().to_string(),
                branch: parts.next().map(str::to_string),
            }
        })
        .collect()
}

/// Snapshot one listed repository. A local work tree listed without a
/// branch is ingested in place; anything else is cloned into `workdir`,
/// defaulting to branch `main`.
pub fn snapshot_source(source: &RepoSource, workdir: &std::path::Path) -> Result<RepositorySnapshot, CorpusError> {
    let local = std::path::Path::new(&source.location);
    match &source.branch {
        None if local.join(".git").exists() => ingest_local(local),
        branch => snapshot_repository(&source.location, branch.as_deref().unwrap_or("main"), workdir),
    }
}
