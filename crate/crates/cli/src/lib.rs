//! Command implementations behind the `gscsim` binary.
//!
//! Exit codes: 0 on success, 1 when a run fails at runtime (nothing
//! routable, an unroutable query, an I/O failure), 2 for usage and
//! configuration errors.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn usage(e: impl ToString) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn runtime(e: impl ToString) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| CliError::Runtime(format!("writing {}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| fail(&e))?;
    // temporary files are created owner-only
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))
            .map_err(|e| fail(&e))?;
    }
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}
