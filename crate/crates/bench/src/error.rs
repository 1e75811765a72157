use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("unknown config `{0}`")]
    UnknownConfig(String),
    #[error(transparent)]
    Solver(#[from] minres_npc::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    TraceFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("profile: {0}")]
    Profile(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> BenchError {
    let path = path.into();
    move |source| BenchError::Io { path, source }
}
