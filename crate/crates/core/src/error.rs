use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} outside domain of size {domain}")]
    OutOfDomain { index: usize, domain: usize },

    #[error("eta = 0 gives an unbounded privacy loss")]
    UnboundedPrivacyLoss,

    #[error("exhaustive enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("grid point {index} ({variable} = {value}): {source}")]
    GridPoint {
        index: usize,
        variable: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("config: {0}")]
    ConfigValue(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input (config, parameters) rather
    /// than I/O.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Io(_) | Error::Csv(_) => false,
            Error::Trial { source, .. } | Error::GridPoint { source, .. } => {
                source.is_config_error()
            }
            _ => true,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
