use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid numeric input: {0}")]
    NumericInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("memory kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("task error: {0}")]
    Task(String),

    #[error("grammar error at line {line}: {message}")]
    Grammar { line: usize, message: String },

    #[error("rejection sampling gave up after {attempts} attempts")]
    RejectionExhausted { attempts: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("trace does not belong to this model/example: {0}")]
    StaleTrace(String),

    #[error("cannot score an empty batch")]
    EmptyBatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            found,
        })
    }
}
