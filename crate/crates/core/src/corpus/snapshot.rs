use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::{CorpusError, RepositorySnapshot};

/// A full 40-character lowercase hex git object id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CommitHash(String);

impl CommitHash {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CommitHash {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        let ok = value.len() == 40
            && value
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if ok {
            Ok(Self(value))
        } else {
            Err(CorpusError::InvalidCommitHash(value))
        }
    }
}

impl std::str::FromStr for CommitHash {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::try_from(s.to_string())
    }
}

impl From<CommitHash> for String {
    fn from(value: CommitHash) -> Self {
        value.0
    }
}

impl fmt::Display for CommitHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn git(dir: Option<&Path>, args: &[&str]) -> Result<std::process::Output, CorpusError> {
    let mut cmd = Command::new("git");
    if let Some(dir) = dir {
        cmd.arg("-C").arg(dir);
    }
    cmd.args(args).env("GIT_TERMINAL_PROMPT", "0");
    cmd.output().map_err(|e| CorpusError::Git {
        args: args.join(" "),
        message: e.to_string(),
    })
}

fn git_ok(dir: Option<&Path>, args: &[&str]) -> Result<String, CorpusError> {
    let out = git(dir, args)?;
    if !out.status.success() {
        return Err(CorpusError::Git {
            args: args.join(" "),
            message: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn head_commit(dir: &Path) -> Result<CommitHash, CorpusError> {
    git_ok(Some(dir), &["rev-parse", "HEAD"])?.parse()
}

/// Repository id derived from the last URL path segment.
fn repo_id_from_url(url: &str) -> String {
    let trimmed = url.trim_end_matches(['/', '\\']);
    let last = trimmed
        .rsplit(['/', '\\', ':'])
        .next()
        .unwrap_or(trimmed);
    let last = last.strip_suffix(".git").unwrap_or(last);
    let id: String = last
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if id.is_empty() {
        "repo".to_string()
    } else {
        id
    }
}

/// Clone `url` at `branch` into `workdir/<repo id>` and pin HEAD. An
/// existing clone from an earlier run is fetched and re-checked-out instead.
pub fn snapshot_repository(
    url: &str,
    branch: &str,
    workdir: &Path,
) -> Result<RepositorySnapshot, CorpusError> {
    let listing = git(None, &["ls-remote", "--heads", url, branch])?;
    if !listing.status.success() {
        return Err(CorpusError::Clone {
            url: url.to_string(),
            message: String::from_utf8_lossy(&listing.stderr).trim().to_string(),
        });
    }
    if listing.stdout.iter().all(u8::is_ascii_whitespace) {
        return Err(CorpusError::BranchNotFound {
            url: url.to_string(),
            branch: branch.to_string(),
        });
    }

    let repo_id = repo_id_from_url(url);
    let dest = workdir.join(&repo_id);
    if dest.join(".git").exists() {
        git_ok(Some(&dest), &["fetch", "--quiet", "origin", branch])?;
        git_ok(Some(&dest), &["checkout", "--quiet", "--force", "--detach", "FETCH_HEAD"])?;
    } else {
        std::fs::create_dir_all(workdir)?;
        let dest_str = dest.to_string_lossy();
        let out = git(
            None,
            &["clone", "--quiet", "--single-branch", "--branch", branch, url, &dest_str],
        )?;
        if !out.status.success() {
            return Err(CorpusError::Clone {
                url: url.to_string(),
                message: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
    }

    Ok(RepositorySnapshot {
        repo_id,
        url: url.to_string(),
        branch: branch.to_string(),
        commit_hash: head_commit(&dest)?,
        local_path: dest,
    })
}

/// Take a snapshot of an already checked-out work tree without cloning.
pub fn ingest_local(path: &Path) -> Result<RepositorySnapshot, CorpusError> {
    if !path.join(".git").exists() {
        return Err(CorpusError::NotARepository(path.to_path_buf()));
    }
    let local_path: PathBuf = path.canonicalize()?;
    let branch = git_ok(Some(&local_path), &["rev-parse", "--abbrev-ref", "HEAD"])?;
    let repo_id = local_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "repo".to_string());
    Ok(RepositorySnapshot {
        repo_id,
        url: local_path.to_string_lossy().into_owned(),
        branch,
        commit_hash: head_commit(&local_path)?,
        local_path,
    })
}
