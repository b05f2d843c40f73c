use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported volume: {0}")]
    Unsupported(String),
    #[error("invalid label {value} at voxel {index}")]
    InvalidLabel { value: u8, index: usize },
    #[error("non-finite intensity at voxel {0}")]
    NonFinite(usize),
    #[error("singular affine")]
    SingularAffine,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("trilinear interpolation requested on a label volume")]
    LabelInterpolation,
    #[error("invalid phantom spec: {0}")]
    InvalidPhantom(String),
    #[error("unsupported field strength {0} T")]
    UnsupportedField(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("missing tissue entry for class {0}")]
    MissingTissue(u8),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("empty stack list")]
    EmptyStacks,
    #[error("stack {0} does not overlap the reconstruction grid")]
    DisjointFieldOfView(usize),
    #[error("solver diverged at iteration {iteration} (objective trace: {trace:?})")]
    Diverged { iteration: usize, trace: Vec<f64> },
    #[error("degenerate paired sample: all differences are zero")]
    DegenerateSample,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("invalid p-value {0}, expected a value in (0, 1]")]
    InvalidPValue(f64),
    #[error("report: {0}")]
    Report(String),
    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("missing sidecar {0}")]
    MissingSidecar(PathBuf),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
