use colband::error::{ClusterError, FormatError, LinalgError, PolicyError, SimilarityError};

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Wraps an I/O failure on `path`.
    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Parse { .. } => CliError::Parse(e.to_string()),
            FormatError::Io(e) => CliError::Parse(e.to_string()),
            FormatError::Linalg(e) => e.into(),
            FormatError::Similarity(e) => e.into(),
            FormatError::Policy(e) => e.into(),
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<SimilarityError> for CliError {
    fn from(e: SimilarityError) -> Self {
        match e {
            SimilarityError::BadKeepPct(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::ZeroK | ClusterError::TooFewPoints { .. } => {
                CliError::Config(e.to_string())
            }
            ClusterError::NoPoints | ClusterError::DimensionMismatch { .. } => {
                CliError::Parse(e.to_string())
            }
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Config(_) => CliError::Config(e.to_string()),
            PolicyError::Linalg(_) => CliError::Numeric(e.to_string()),
            PolicyError::EmptyPool
            | PolicyError::ClusterOutOfRange { .. }
            | PolicyError::FeatureDim { .. } => CliError::Parse(e.to_string()),
        }
    }
}
