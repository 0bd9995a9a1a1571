use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config key '{key}': {message}")]
    Config { key: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        Self::Config { key: key.to_string(), message: message.into() }
    }

    /// 1 usage/config, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config { .. } => 1,
            Self::Numerical(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl From<wbfm_core::Error> for CliError {
    fn from(e: wbfm_core::Error) -> Self {
        use wbfm_core::Error as E;
        match e {
            E::NotPositiveDefinite(_) | E::Singular | E::EmptyCandidates => Self::Numerical(e.to_string()),
            E::Io(_) | E::Format(_) => Self::Io(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
