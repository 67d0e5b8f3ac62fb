use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("missing gold article `{0}`")]
    MissingGold(String),

    #[error("cannot score against an empty index")]
    EmptyIndex,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("case `{0}` has no kept paragraphs")]
    NoKeptParagraphs(String),

    #[error("scorer failed on pair ({query}, {candidate}): {msg}")]
    ScorerFailure {
        query: String,
        candidate: String,
        msg: String,
    },

    #[error("scorer returned {score} outside [0,1] for pair ({query}, {candidate})")]
    ScoreOutOfRange {
        query: String,
        candidate: String,
        score: f64,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported snapshot version {0}")]
    SnapshotVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
