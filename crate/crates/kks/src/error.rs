use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown player `{0}` referenced by statement")]
    UnknownPlayer(String),

    #[error("malformed statement: {0}")]
    MalformedStatement(String),

    #[error("puzzle has {players} players, above the solver cap of {cap}")]
    PlayerCap { players: usize, cap: usize },

    #[error("generation failed after {attempts} attempts")]
    GenerationFailed { attempts: u32 },

    #[error("puzzle has {count} solutions, expected exactly one")]
    NotUnique { count: usize },

    #[error("syntax error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("{0} requires non-empty input")]
    EmptyInput(&'static str),

    #[error("rank-deficient design matrix; dependent columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("agent `{agent}` failed: {message}")]
    Agent { agent: String, message: String },

    #[error("supervisor failed: {0}")]
    Supervisor(String),

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("http transport: {0}")]
    Http(#[from] reqwest::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
