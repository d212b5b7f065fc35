use thiserror::Error;

/// Errors produced by the pipeline stages.
#[derive(Error, Debug)]
pub enum Error {
    #[error("parse error in {path} at row {row}: {msg}")]
    Parse {
        path: String,
        row: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("unknown outcome sub-category '{0}'")]
    UnknownSubcategory(String),

    #[error("unmapped category '{0}'")]
    UnmappedCategory(String),

    #[error("cannot balance class '{class}': {reason}")]
    Balance { class: String, reason: String },

    #[error("training diverged (non-finite loss at epoch {epoch}); try a smaller learning rate")]
    Divergence { epoch: usize },

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attach a pipeline stage name to an error for CLI reporting.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
