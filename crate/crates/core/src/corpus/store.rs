//! Reading and writing corpus files.

use std::fs::{File, OpenOptions, TryLockError};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{parse, serialize, Corpus, CorpusError, ParseError};

/// What a writer does when another process holds the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LockMode {
    #[default]
    Wait,
    FailFast,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: locked by another writer", .0.display())]
    Locked(PathBuf),
    #[error("{}: {source}", .path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn lock_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".lock");
    path.with_file_name(name)
}

/// Held for the duration of a write. The lock is released when the file
/// handle is dropped.
struct WriteLock {
    _file: File,
}

fn acquire(path: &Path, mode: LockMode) -> Result<WriteLock, StoreError> {
    let lock = lock_path(path);
    let file = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(&lock)
        .map_err(io_err(&lock))?;
    match mode {
        LockMode::Wait => file.lock().map_err(io_err(&lock))?,
        LockMode::FailFast => match file.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(StoreError::Locked(path.to_path_buf())),
            Err(TryLockError::Error(e)) => return Err(io_err(&lock)(e)),
        },
    }
    Ok(WriteLock { _file: file })
}

/// Writes the corpus atomically: the text goes to a temporary file in the
/// target directory which then replaces `path`.
pub fn save(corpus: &Corpus, path: &Path, mode: LockMode) -> Result<(), StoreError> {
    let text = serialize(corpus)?;
    let _guard = acquire(path, mode)?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(text.as_bytes()).map_err(io_err(tmp.path()))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Reads and parses a corpus file. Nothing is returned unless the whole
/// file parses.
pub fn load(path: &Path) -> Result<Corpus, StoreError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse(&text).map_err(|source| StoreError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagset::default_tagsets;

    #[test]
    fn fail_fast_reports_held_lock() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.asc");
        let corpus = Corpus::new("c", default_tagsets()).unwrap();
        let held = acquire(&path, LockMode::Wait).unwrap();
        assert!(matches!(
            save(&corpus, &path, LockMode::FailFast),
            Err(StoreError::Locked(_))
        ));
        drop(held);
        save(&corpus, &path, LockMode::FailFast).unwrap();
        assert_eq!(load(&path).unwrap(), corpus);
    }
}
