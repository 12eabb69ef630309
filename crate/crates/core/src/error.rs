use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at flat index {index}")]
    NonFinite { index: usize },
    #[error("degenerate rank-one update (denominator {denominator:e})")]
    DegenerateUpdate { denominator: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("no points to cluster")]
    NoPoints,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the {distinct} distinct points available")]
    TooFewPoints { k: usize, distinct: usize },
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimilarityError {
    #[error("column {column} is entirely zero after clamping negative weights")]
    ZeroColumn { column: usize },
    #[error("similarity matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("column {column} is not a probability vector: {reason}")]
    NotStochastic { column: usize, reason: String },
    #[error("keep percentage {0} outside (0, 100]")]
    BadKeepPct(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("invalid policy configuration: {0}")]
    Config(String),
    #[error("cluster index {index} out of range for {clusters} clusters")]
    ClusterOutOfRange { index: usize, clusters: usize },
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    FeatureDim { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl FormatError {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }
}
