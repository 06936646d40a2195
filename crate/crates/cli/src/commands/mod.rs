pub mod benchmark;
pub mod evaluate;
pub mod predict;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// `dir/name.ext` next to `path`, using `path`'s file stem.
pub(crate) fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Fails before any work if `path` would land in a missing directory.
pub(crate) fn check_output(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::Usage(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}
