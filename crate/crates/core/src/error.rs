use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("cell size mismatch: field has {field} m cells, primitive has {primitive} m cells")]
    CellSizeMismatch { field: f64, primitive: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid track: {0}")]
    InvalidTrack(String),
    #[error("heading undefined: track has no nonzero displacement")]
    HeadingUndefined,
    #[error("empty goal set")]
    EmptyGoalSet,
    #[error("invalid goal set: {0}")]
    InvalidGoalSet(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("interpolation offset {tau} outside [0, {dt}]")]
    InterpolationOutOfRange { tau: f64, dt: f64 },
    #[error("invalid factor graph: {0}")]
    InvalidGraph(String),
    #[error("invalid initialization: cost is not finite")]
    InvalidInitialization,
    #[error("empty ground-truth trajectory")]
    EmptyTruth,
    #[error("horizon shorter than one support step")]
    HorizonTooShort,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
