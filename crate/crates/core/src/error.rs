use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("document {id}: text is not valid UTF-8")]
    InvalidUtf8 { id: String },

    #[error("invalid rewrite rules: {0}")]
    Rules(String),

    #[error("lexicon {category}: {message}")]
    Lexicon { category: String, message: String },

    #[error("missing lexicon file(s) for categor{}: {}", if .0.len() == 1 { "y" } else { "ies" }, .0.join(", "))]
    MissingLexicons(Vec<String>),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    Model(String),

    #[error("embedding {id:?}: {message}")]
    Embedding { id: String, message: String },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::InvalidUtf8 { .. } => "invalid_utf8",
            Error::Rules(_) => "rules",
            Error::Lexicon { .. } => "lexicon",
            Error::MissingLexicons(_) => "missing_lexicons",
            Error::Parse { .. } => "parse",
            Error::DuplicateId(_) => "duplicate_id",
            Error::EmptyDataset => "empty_dataset",
            Error::Dimension { .. } => "dimension",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Model(_) => "model",
            Error::Embedding { .. } => "embedding",
            Error::Stage { .. } => "stage",
            Error::Serde(_) => "serde",
        }
    }

    pub(crate) fn at_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
