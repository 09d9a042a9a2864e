use std::path::{Path, PathBuf};

use pilus_core::snapshot::SnapshotError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
/// Bad arguments, unreadable or invalid scenario files.
pub const EXIT_CONFIG: i32 = 2;
/// The simulation itself failed.
pub const EXIT_RUNTIME: i32 = 3;
/// Reading or writing artifacts failed, including corrupt snapshot files.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Corrupt { path: PathBuf, line: usize, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Io { .. } | CliError::Corrupt { .. } => EXIT_IO,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn snapshot(path: &Path, e: SnapshotError) -> CliError {
        let path = path.to_path_buf();
        match e {
            SnapshotError::Parse { line, message } => CliError::Corrupt { path, line, message },
            SnapshotError::Empty => CliError::Corrupt {
                path,
                line: 1,
                message: "empty snapshot stream".into(),
            },
            SnapshotError::Format { format, version } => CliError::Corrupt {
                path,
                line: 1,
                message: format!("unsupported stream format `{format}` version {version}"),
            },
            SnapshotError::Io(source) => CliError::Io { path, source },
        }
    }
}
