//! Reading inputs and writing outputs atomically.

use std::io::Write;
use std::path::Path;

use ciflow_core::markup::parse_inline;
use ciflow_core::PolicyDocument;

use crate::error::{Error, Result};
use crate::standoff::from_standoff;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads a document: `.json` files are standoff JSON, anything else is
/// inline markup.
pub fn load_document(path: &Path) -> Result<PolicyDocument> {
    let bytes = read_bytes(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        return from_standoff(&bytes).map_err(|e| Error::format(path, e));
    }
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    })?;
    parse_inline(&text).map_err(|e| Error::format(path, e))
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, creating parent directories. An existing file is only
/// replaced when `force` is set.
pub fn write_atomic(path: &Path, bytes: &[u8], force: bool) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if !force && path.exists() {
        return Err(Error::Exists(path.into()));
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    let persisted = if force {
        tmp.persist(path).map(drop)
    } else {
        tmp.persist_noclobber(path).map(drop)
    };
    persisted.map_err(|e| {
        if e.error.kind() == std::io::ErrorKind::AlreadyExists {
            Error::Exists(path.into())
        } else {
            Error::io(path, e.error)
        }
    })
}
