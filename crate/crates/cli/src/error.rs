use std::path::PathBuf;

use thiserror::Error;

/// Exit codes, also listed in `changeattr --help`.
pub mod code {
    pub const OK: u8 = 0;
    /// Bad command line (reported by the argument parser).
    pub const USAGE: u8 = 2;
    pub const MISSING_FILE: u8 = 3;
    pub const SCHEMA: u8 = 4;
    pub const UNKNOWN_METHOD: u8 = 5;
    pub const INVALID_INPUT: u8 = 6;
    pub const NUMERIC: u8 = 7;
    pub const IO: u8 = 8;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] changeattr::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::MissingFile(_) => code::MISSING_FILE,
            CliError::Io { .. } => code::IO,
            CliError::Config(_) => code::INVALID_INPUT,
            CliError::Core(e) => core_code(e),
        }
    }
}

fn core_code(e: &changeattr::Error) -> u8 {
    use changeattr::Error as E;
    match e {
        E::Sample { source, .. } => core_code(source),
        E::UnknownMethod(_) => code::UNKNOWN_METHOD,
        E::Json(_) | E::Schema(_) | E::ShapeMismatch { .. } => code::SCHEMA,
        E::NonFiniteLoss { .. } | E::NotPositiveDefinite => code::NUMERIC,
        E::Io(_) => code::IO,
        _ => code::INVALID_INPUT,
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
