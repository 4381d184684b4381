use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] corruptbench_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Parameter(String),
    #[error("{0}")]
    Format(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const IO: i32 = 2;
    pub const PARAMETER: i32 = 3;
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) => core_exit_code(e),
            HarnessError::Io { .. } | HarnessError::Format(_) => exit::IO,
            HarnessError::Parse { .. } | HarnessError::Validation(_) => exit::VALIDATION,
            HarnessError::Parameter(_) => exit::PARAMETER,
        }
    }
}

pub fn core_exit_code(e: &corruptbench_core::Error) -> i32 {
    use corruptbench_core::Error as E;
    match e {
        E::Io(_) | E::Format(_) => exit::IO,
        E::Parameter(_) => exit::PARAMETER,
        E::Validation(_) | E::UndefinedMeasure(_) => exit::VALIDATION,
    }
}
