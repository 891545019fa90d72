use thiserror::Error;

/// A record-level problem in a field-tagged export file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("query syntax error at position {position}: expected {expected}")]
pub struct QuerySyntaxError {
    pub position: usize,
    pub expected: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record: {0}")]
    Malformed(#[from] MalformedRecord),
    #[error(transparent)]
    Query(#[from] QuerySyntaxError),
    #[error("alias table line {line}: {reason}")]
    AliasTable { line: usize, reason: String },
    #[error("coverage target {0} is outside (0, 1]")]
    InvalidTarget(f64),
    #[error("{0} must be at least 1")]
    InvalidThreshold(&'static str),
    #[error("unsupported export format `{0}`")]
    UnsupportedFormat(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Malformed(_) | Error::AliasTable { .. } | Error::Io(_) | Error::Json(_) => 1,
            Error::Query(_) => 2,
            Error::InvalidTarget(_)
            | Error::InvalidThreshold(_)
            | Error::UnsupportedFormat(_)
            | Error::Config(_) => 3,
            Error::Invariant(_) => 4,
            Error::Stage { .. } => unreachable!("root() strips stages"),
        }
    }
}
