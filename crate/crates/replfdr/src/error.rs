use std::path::PathBuf;

use replfdr_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{path}: p-values outside [0, 1] on lines {}", format_lines(lines))]
    OutOfRange { path: String, lines: Vec<usize> },

    #[error("numerical failure: {0}")]
    Numerical(CoreError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("selftest failed: {0} check(s) did not pass")]
    SelftestFailed(usize),
}

fn format_lines(lines: &[usize]) -> String {
    const SHOWN: usize = 20;
    let mut out: Vec<String> = lines.iter().take(SHOWN).map(usize::to_string).collect();
    if lines.len() > SHOWN {
        out.push(format!("... ({} total)", lines.len()));
    }
    out.join(", ")
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Parse { .. } | AppError::OutOfRange { .. } => 3,
            AppError::Numerical(_) => 4,
            AppError::Io { .. } | AppError::SelftestFailed(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } | CoreError::InvalidProportions(_) => AppError::Config(e.to_string()),
            other => AppError::Numerical(other),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
