use std::path::PathBuf;

use thiserror::Error;

use crate::kb_data::Relation;
use crate::knowledge_engine::Direction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which part of a prompt could not be located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPart {
    Subject,
    Headword,
}

impl std::fmt::Display for MissingPart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MissingPart::Subject => f.write_str("subject"),
            MissingPart::Headword => f.write_str("headword"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("could not parse prompt {text:?}: no {missing} found")]
    Parse { text: String, missing: MissingPart },
    #[error("pattern error: {0}")]
    Pattern(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("backend error ({relation} / {direction}): {message}")]
    Backend {
        relation: Relation,
        direction: Direction,
        message: String,
    },
    #[error("adapter error: {0}")]
    Adapter(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("paraphrase error: {0}")]
    Paraphrase(String),
    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Stage name when this error was raised inside the pipeline.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
