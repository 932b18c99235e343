use std::path::PathBuf;

use ciflow_core::analysis::{AnalysisError, LexiconError};
use ciflow_core::crowd::CrowdError;
use ciflow_core::markup::MarkupError;
use ciflow_core::readability::ReadabilityError;
use ciflow_core::ModelError;

/// A problem with the contents of one input.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("flow `{flow}`: {source}")]
    Flow { flow: String, source: ModelError },
    #[error(transparent)]
    Document(ModelError),
    #[error(transparent)]
    Markup(#[from] MarkupError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{} already exists (use --force to overwrite)", .0.display())]
    Exists(PathBuf),
    #[error("bundle {}: {message}", path.display())]
    Bundle { path: PathBuf, message: String },
    #[error(transparent)]
    Crowd(#[from] CrowdError),
    #[error(transparent)]
    Readability(#[from] ReadabilityError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, source: impl Into<FormatError>) -> Self {
        Error::Format {
            path: path.into(),
            source: source.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
