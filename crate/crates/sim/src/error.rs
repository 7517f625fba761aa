use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] predplan_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error("{what} at ({x:.3}, {y:.3}) is not in free space")]
    Blocked { what: String, x: f64, y: f64 },
    #[error("no path for {what} from ({fx:.3}, {fy:.3}) to ({tx:.3}, {ty:.3})")]
    Unreachable { what: String, fx: f64, fy: f64, tx: f64, ty: f64 },
    #[error("{0}")]
    Invalid(String),
}

pub type SimResult<T> = std::result::Result<T, SimError>;

pub(crate) fn read(path: &std::path::Path) -> SimResult<String> {
    std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write(path: &std::path::Path, contents: &str) -> SimResult<()> {
    std::fs::write(path, contents).map_err(|source| SimError::Io { path: path.to_path_buf(), source })
}
