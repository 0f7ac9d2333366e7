//! Run directory bookkeeping: an append-only event log and a workspace
//! whose file writes can be undone.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

/// `journal.jsonl` inside a run directory. Safe to share across threads.
#[derive(Debug)]
pub struct RunJournal {
    dir: PathBuf,
    log: Mutex<File>,
}

impl RunJournal {
    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("journal.jsonl"))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            log: Mutex::new(log),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Append one event. Journal write failures are logged, not fatal.
    pub fn record(&self, event: &str, payload: Value) {
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let mut entry = json!({ "ts": ts, "event": event });
        if let (Some(obj), Value::Object(extra)) = (entry.as_object_mut(), payload) {
            obj.extend(extra);
        }
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(log, "{entry}") {
            tracing::warn!("journal write failed: {e}");
        }
    }
}

#[derive(Debug)]
enum Undo {
    Created(PathBuf),
    Replaced { path: PathBuf, original: Vec<u8> },
    Removed { path: PathBuf, original: Vec<u8> },
    Dir(PathBuf),
}

/// A project checkout whose modifications are recorded so that
/// [`Workspace::restore`] returns it to its original bytes.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    backup_dir: Option<PathBuf>,
    undo: Vec<Undo>,
    backups: usize,
}

impl Workspace {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            backup_dir: None,
            undo: Vec::new(),
            backups: 0,
        }
    }

    /// Also copy every overwritten or deleted file into `dir`.
    pub fn with_backups(mut self, dir: &Path) -> Self {
        self.backup_dir = Some(dir.to_path_buf());
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn is_pristine(&self) -> bool {
        self.undo.is_empty()
    }

    fn backup(&mut self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        let Some(dir) = &self.backup_dir else {
            return Ok(());
        };
        fs::create_dir_all(dir)?;
        self.backups += 1;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        fs::write(dir.join(format!("{:04}-{name}", self.backups)), bytes)
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        if let Some(parent) = path.parent() {
            let mut missing = Vec::new();
            let mut cur = Some(parent);
            while let Some(dir) = cur {
                if dir.as_os_str().is_empty() || dir.exists() {
                    break;
                }
                missing.push(dir.to_path_buf());
                cur = dir.parent();
            }
            fs::create_dir_all(parent)?;
            for dir in missing.into_iter().rev() {
                self.undo.push(Undo::Dir(dir));
            }
        }
        match fs::read(path) {
            Ok(original) => {
                self.backup(path, &original)?;
                fs::write(path, bytes)?;
                self.undo.push(Undo::Replaced {
                    path: path.to_path_buf(),
                    original,
                });
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                fs::write(path, bytes)?;
                self.undo.push(Undo::Created(path.to_path_buf()));
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }

    pub fn remove(&mut self, path: &Path) -> io::Result<()> {
        let original = fs::read(path)?;
        self.backup(path, &original)?;
        fs::remove_file(path)?;
        self.undo.push(Undo::Removed {
            path: path.to_path_buf(),
            original,
        });
        Ok(())
    }

    /// Undo every recorded change, newest first.
    pub fn restore(&mut self) -> io::Result<()> {
        while let Some(step) = self.undo.pop() {
            match step {
                Undo::Created(path) => match fs::remove_file(&path) {
                    Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
                    _ => {}
                },
                Undo::Replaced { path, original } | Undo::Removed { path, original } => {
                    fs::write(&path, original)?
                }
                Undo::Dir(dir) => {
                    // Only empty directories we created go away; a build may
                    // have left output inside.
                    let _ = fs::remove_dir(&dir);
                }
            }
        }
        Ok(())
    }
}
