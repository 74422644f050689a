use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure category, used by the command-line front end to pick an
/// exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Config,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid UTF-8 in {path} at line {line}")]
    InvalidEncoding { path: PathBuf, line: usize },

    #[error("alignment error: {left} has {left_count} sentences but {right} has {right_count}")]
    Alignment {
        left: String,
        left_count: usize,
        right: String,
        right_count: usize,
    },

    #[error("corpora do not share a vocabulary: {0}")]
    VocabularyMismatch(String),

    #[error("degenerate partition: fraction {fraction} of {total} sentences leaves an empty part")]
    DegeneratePartition { fraction: f64, total: usize },

    #[error("unknown token class `{0}`")]
    UnknownClass(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("incompatible histograms: {0}")]
    IncompatibleHistogram(String),

    #[error("malformed {what} at line {line}: {message}")]
    Format {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("invalid lexicon: {0}")]
    Lexicon(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("model not trained")]
    Untrained,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration budget exceeded: {needed} sequences > limit {limit}")]
    EnumerationBudget { needed: u128, limit: u128 },

    #[error("invalid distribution: {0}")]
    Distribution(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::InvalidEncoding { .. }
            | Error::Alignment { .. }
            | Error::VocabularyMismatch(_)
            | Error::EmptyCorpus(_)
            | Error::Format { .. }
            | Error::Dataset(_) => ErrorKind::Input,
            Error::DegeneratePartition { .. }
            | Error::UnknownClass(_)
            | Error::IncompatibleHistogram(_)
            | Error::Lexicon(_)
            | Error::Training(_)
            | Error::Untrained
            | Error::Config(_) => ErrorKind::Config,
            Error::EnumerationBudget { .. } | Error::Distribution(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
