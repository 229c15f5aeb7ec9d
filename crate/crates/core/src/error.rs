use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing required config key `{0}`")]
    MissingKey(&'static str),

    #[error("empty training corpus")]
    EmptyCorpus,

    #[error("ARPA parse error at line {line}: {msg}")]
    Arpa { line: usize, msg: String },

    #[error("malformed subword sequence: token `{0}` carries a continuation marker but ends the sentence")]
    MalformedSubword(String),

    #[error("need at least 2 scores to estimate sigma, got {0}")]
    TooFewScores(u64),

    #[error("degenerate sigma ({0}); a gaussian kernel needs sigma > 0")]
    DegenerateSigma(f64),

    #[error("empty score vector")]
    EmptyScores,

    #[error("{path}:{line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("alignment mismatch in {path}: {msg}")]
    Alignment { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("invalid config file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn arpa(line: usize, msg: impl Into<String>) -> Self {
        Error::Arpa {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
