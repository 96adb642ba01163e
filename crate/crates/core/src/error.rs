use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported element type `{0}`")]
    UnsupportedElementType(String),

    #[error("payload holds {actual} bytes, header declares {expected}")]
    PayloadSize { expected: usize, actual: usize },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("query point {0:?} (continuous index) is outside the interpolation domain")]
    OutOfBounds([f64; 3]),

    #[error("slice index {index} out of range for {depth} slices")]
    SliceOutOfRange { index: usize, depth: usize },

    #[error("empty mask")]
    EmptyMask,

    #[error("trachea start scan reached the last slice without a distance maximum")]
    StartNotFound,

    #[error("voxel {0:?} lies outside the mask")]
    AnchorOutsideMask([usize; 3]),

    #[error("distal voxel {0:?} is not reachable from the trachea start")]
    Unreachable([usize; 3]),

    #[error("path has {0} points, need at least {1}")]
    PathTooShort(usize, usize),

    #[error("consecutive points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("parameter {value} outside [{min}, {max}]")]
    ParameterOutOfRange { value: f64, min: f64, max: f64 },

    #[error("spline derivative vanishes at t = {0}")]
    DegenerateTangent(f64),

    #[error("plane centre lies outside the lumen (mask value {0:.3})")]
    CentreOutsideLumen(f64),

    #[error("ray rejected: {0}")]
    RayRejected(&'static str),

    #[error("ellipse fit failed: {0}")]
    EllipseFit(&'static str),

    #[error("taper regression needs at least 3 stations, got {0}")]
    TooFewStations(usize),

    #[error("non-positive area {0} at station {1}")]
    NonPositiveArea(f64, usize),

    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),

    #[error("invalid simulation input: {0}")]
    InvalidSimulation(String),

    #[error("invalid statistics input: {0}")]
    InvalidStatistics(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
