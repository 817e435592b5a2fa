use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong between reading a corpus and writing a scene.
///
/// Variants group into three families that map onto CLI exit codes:
/// configuration problems (1), bad or missing input data (2) and broken
/// internal invariants (3). See [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid clause pattern `{pattern}`: {reason}")]
    InvalidPattern { pattern: String, reason: String },

    #[error("no embedding source: set embedding.path or enable the fallback embedder")]
    NoEmbeddingSource,

    #[error("no retained sentences")]
    NoRetainedSentences,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}:{line}: {reason}")]
    Parse {
        origin: String,
        line: usize,
        reason: String,
    },

    #[error("embedding dimension mismatch: found {found}, expected {expected}")]
    DimensionMismatch { found: usize, expected: usize },

    #[error("missing rows for sentence indices {indices:?}")]
    MissingRows { indices: Vec<usize> },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,

    #[error("unsupported scene version `{found}`")]
    Version { found: String },

    #[error("scene schema violation at `{path}`: {reason}")]
    Schema { path: String, reason: String },

    #[error("input `{role}` ({path}) no longer matches its recorded digest")]
    DigestMismatch { role: String, path: String },

    #[error("dangling reference: {0}")]
    DanglingReference(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub fn parse(origin: impl Into<String>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.into(),
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 config, 2 input, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidPattern { .. }
            | Error::NoEmbeddingSource
            | Error::NoRetainedSentences => 1,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::DimensionMismatch { .. }
            | Error::MissingRows { .. }
            | Error::NonFinite { .. }
            | Error::Version { .. }
            | Error::Schema { .. }
            | Error::DigestMismatch { .. } => 2,
            Error::ZeroVector | Error::DanglingReference(_) | Error::Invariant(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
