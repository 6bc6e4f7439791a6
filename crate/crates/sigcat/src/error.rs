use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] sigcat_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: {msg}", path.display())]
    Format { path: PathBuf, line: usize, msg: String },
    #[error("{}: row {row}, column {column}: cannot parse {cell:?} as {expected}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        cell: String,
        expected: &'static str,
    },
    #[error("{}: line {line}: label {label} has no entry in the label map", path.display())]
    Mapping { path: PathBuf, line: usize, label: i64 },
    #[error("{}: {msg}", path.display())]
    Checkpoint { path: PathBuf, msg: String },
    /// Bad flags, malformed or unknown config keys.
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// 2 for usage and configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Core(sigcat_core::Error::Config(_)) => 2,
            _ => 1,
        }
    }
}
