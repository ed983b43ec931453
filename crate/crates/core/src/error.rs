//! Crate-wide error type.

/// Errors produced by validation, solvers, and file I/O in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bounding-box side must be positive and finite, got {0}")]
    InvalidBox(f64),
    #[error("pair ({birth}, {death}) is not finite")]
    NonFinitePair { birth: f64, death: f64 },
    #[error("pair ({birth}, {death}) lies outside the closed domain of side {side}")]
    PairOutsideBox { birth: f64, death: f64, side: f64 },
    #[error("diagram sample must contain at least one diagram")]
    EmptySample,
    #[error("diagrams in a sample must share the same box side")]
    MixedBoxes,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("ragged point cloud: expected dimension {expected}, row {row} has {got}")]
    DimensionMismatch { expected: usize, row: usize, got: usize },
    #[error("unsupported point dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("cloud of {n} points exceeds the reference-reduction limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("cloud of {n} points exceeds the supported limit of {limit}")]
    CloudTooLarge { n: usize, limit: usize },
    #[error("max_edge {max_edge} exceeds box side {side}")]
    MaxEdgeExceedsBox { max_edge: f64, side: f64 },
    #[error("filtration parameters must be finite and positive")]
    InvalidFiltration,
    #[error("kernel bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("kernel does not integrate to 1 within 1e-4 (got {0})")]
    KernelNotNormalized(f64),
    #[error("diagram {index} in the sample is empty; per-diagram normalization is undefined")]
    EmptyDiagramInSample { index: usize },
    #[error("all diagrams in the sample are empty")]
    AllDiagramsEmpty,
    #[error("scalar fields have mismatched grid geometry")]
    GridMismatch,
    #[error("grid shape must have positive cell size and at least one cell")]
    InvalidGrid,
    #[error("negative density {value} at cell {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("transport instance with {n} atoms exceeds the solver limit of {limit}")]
    SolverLimit { n: usize, limit: usize },
    #[error("order q = {0} outside the supported range [1, 16]")]
    InvalidQ(f64),
    #[error("order q = {0} must be nonnegative and finite")]
    InvalidOrder(f64),
    #[error("grid too coarse: {cells_per_radius:.2} cells per ball radius, need at least 8")]
    ResolutionTooCoarse { cells_per_radius: f64 },
    #[error("invalid query: need 0 <= x1 <= x2 <= side, got ({x1}, {x2})")]
    InvalidBettiQuery { x1: f64, x2: f64 },
    #[error("sweep point {index} has zero mean error; log-log fit is undefined")]
    DegenerateSweep { index: usize },
    #[error("log-log fit requires at least two points with positive coordinates")]
    NonPositiveInput,
    #[error("batch element {index}: {source}")]
    BatchElement { index: usize, source: Box<Error> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at {path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
