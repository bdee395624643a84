use std::io;
use std::path::{Path, PathBuf};

use prominence_core::eval::EvalError;
use prominence_core::features::FeatureError;
use prominence_core::ranking::RankingError;
use prominence_core::svr::SvrError;
use prominence_core::CorpusError;

/// Process exit status for input problems (unreadable or invalid files,
/// missing required inputs).
pub const EXIT_INPUT: u8 = 2;
/// Process exit status for numeric failures (degenerate solver input).
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl AppError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, message: impl Into<String>) -> Self {
        AppError::Parse {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_INPUT,
        }
    }
}

impl From<SvrError> for AppError {
    fn from(e: SvrError) -> Self {
        match e {
            SvrError::InvalidConfig(_) => AppError::Input(e.to_string()),
            _ => AppError::Numeric(e.to_string()),
        }
    }
}

impl From<RankingError> for AppError {
    fn from(e: RankingError) -> Self {
        AppError::Input(e.to_string())
    }
}

impl From<EvalError> for AppError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Svr(s) => s.into(),
            EvalError::Corpus(c) => AppError::Corpus(c),
            EvalError::Feature(f @ FeatureError::NonFinite { .. }) => AppError::Numeric(f.to_string()),
            other => AppError::Input(other.to_string()),
        }
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
