use std::path::PathBuf;

use parcomp_core::consistency::ConsistencyError;
use parcomp_core::corpus::CorpusError;
use parcomp_core::metrics::MetricError;
use parcomp_core::ngram::NGramError;
use parcomp_core::records::RecordError;
use parcomp_core::tokenizer::TokenizerError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: invalid UTF-8 at byte offset {offset}", path.display())]
    InvalidUtf8 { path: PathBuf, offset: usize },
    #[error("{}: empty line at row {row}", path.display())]
    EmptyLine { path: PathBuf, row: usize },
    #[error("line-count mismatch: {} has {found} lines but {} has {expected}", path.display(), first.display())]
    LineCountMismatch {
        path: PathBuf,
        found: usize,
        first: PathBuf,
        expected: usize,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: line {line}: {message}", path.display())]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("tokenizer: {0}")]
    Tokenizer(#[from] TokenizerError),
    #[error("ngram: {0}")]
    NGram(#[from] NGramError),
    #[error("score-records: {0}")]
    Records(#[from] RecordError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricError),
    #[error("consistency: {0}")]
    Consistency(#[from] ConsistencyError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Error {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit status: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }
}
