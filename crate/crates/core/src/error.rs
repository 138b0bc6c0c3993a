//! Crate-level error, with the exit-code class each failure maps to.

use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::dynamics::DynamicsError;
use crate::field::FieldError;
use crate::format::FormatError;
use crate::layout::ValidationError;
use crate::library::LibraryError;
use crate::schedule::ScheduleError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Coarse failure class, used as the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    /// Unreadable or malformed input.
    Parse = 1,
    /// Well-formed input violating a model constraint.
    Validation = 2,
    /// Valid input on which a computation failed.
    Runtime = 3,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ExitClass {
        match self {
            Error::Io { .. } => ExitClass::Parse,
            Error::Format(FormatError::Validation(_)) => ExitClass::Validation,
            Error::Format(_) => ExitClass::Parse,
            Error::Validation(_) | Error::Library(_) => ExitClass::Validation,
            Error::Schedule(ScheduleError::OutOfRange { .. }) => ExitClass::Runtime,
            Error::Schedule(_) => ExitClass::Validation,
            Error::Analysis(AnalysisError::Invalid(_)) => ExitClass::Validation,
            Error::Dynamics(e) if e.is_validation() => ExitClass::Validation,
            Error::Field(_) | Error::Analysis(_) | Error::Dynamics(_) => ExitClass::Runtime,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class() as i32
    }
}
