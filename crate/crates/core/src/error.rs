use thiserror::Error;

#[derive(Debug, Error)]
pub enum NbcsError {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate simplex: |det| = {det:e} below threshold {threshold:e}")]
    DegenerateSimplex { det: f64, threshold: f64 },

    #[error("point lies outside the root simplex (coefficient {coefficient:e} at vertex {vertex})")]
    OutsideRoot { vertex: usize, coefficient: f64 },

    #[error("split point is not interior to the leaf (minimum coefficient {min_coefficient:e})")]
    NotInterior { min_coefficient: f64 },

    #[error("node {0} is not a leaf")]
    NotALeaf(usize),

    #[error("node {0} does not exist")]
    NoSuchNode(usize),

    #[error("vertex index {index} out of range for {len} vertices")]
    VertexOutOfRange { index: usize, len: usize },

    #[error("weight vector has length {got}, expected {expected}")]
    WeightLength { expected: usize, got: usize },

    #[error("input points are affinely dependent (rank deficient)")]
    RankDeficient,

    #[error("training data contains a single class; emit a constant classifier instead")]
    SingleClass,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires d = 2, got d = {0}")]
    PlanarOnly(usize),

    #[error("containment violated: decision value {value:e} at ({x}, {y})")]
    ContainmentViolated { value: f64, x: f64, y: f64 },

    #[error("bound domain error in term `{term}`: {reason}")]
    BoundDomain { term: &'static str, reason: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = NbcsError> = std::result::Result<T, E>;
