use std::path::PathBuf;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The config could not be parsed or violates an invariant.
    #[error("config error: {0}")]
    Config(String),
    /// The simulation or analysis failed on valid input.
    #[error(transparent)]
    Physics(#[from] biphoton_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// An input data file is malformed.
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 config, 3 runtime/physics, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Physics(_) => 3,
            Self::Io { .. } | Self::Format { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
