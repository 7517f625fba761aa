//! Writing result files into an output directory.

use std::path::{Path, PathBuf};

use crate::error::{write, SimError, SimResult};

/// Creates `dir` if needed and writes each `(file name, contents)` pair.
/// Returns the written paths in order.
pub fn export_files(dir: &Path, files: &[(&str, String)]) -> SimResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| SimError::Io { path: dir.to_path_buf(), source })?;
    files
        .iter()
        .map(|(name, contents)| {
            let path = dir.join(name);
            write(&path, contents)?;
            Ok(path)
        })
        .collect()
}
