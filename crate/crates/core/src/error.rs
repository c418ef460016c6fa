use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("degenerate domain")]
    DegenerateDomain,
    #[error("degenerate hull")]
    DegenerateHull,
    #[error("non-separating cut")]
    NonSeparatingCut,
    #[error("no extension region")]
    NoExtensionRegion,
    #[error("invalid angle {0}: must lie in (0, pi]")]
    InvalidAngle(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point {index:?} lies outside the unit cube")]
    OutsideDomain { index: Option<usize> },
    #[error("segment lies outside the partition domain")]
    SegmentOutsideDomain,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label type does not match the forest task")]
    LabelMismatch,
    #[error("forest has not observed any data")]
    Untrained,
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("unsupported model version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("malformed model document: {0}")]
    MalformedModel(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("unknown label column {0:?}")]
    UnknownLabelColumn(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
