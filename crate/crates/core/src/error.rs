use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("symbol {symbol} out of range for {n} bins")]
    SymbolOutOfRange { symbol: usize, n: usize },
    #[error("window has {got} samples, expected {expected}")]
    WindowLength { expected: usize, got: usize },
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("signal has zero mean power, SNR is undefined")]
    ZeroPower,
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("insufficient training data: {kept} windows kept, at least {required} required")]
    InsufficientTraining { kept: usize, required: usize },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Truncated { path: String, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for validation problems, 2 for runtime and I/O
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_)
            | Error::SymbolOutOfRange { .. }
            | Error::WindowLength { .. }
            | Error::Empty(_)
            | Error::ZeroPower
            | Error::Validation(_)
            | Error::Config(_) => 1,
            Error::InsufficientTraining { .. }
            | Error::Format { .. }
            | Error::Truncated { .. }
            | Error::Io { .. } => 2,
        }
    }
}
