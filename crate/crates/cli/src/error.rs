use std::fmt;
use std::process::ExitCode;

use sensorsift_service::ApiError;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, query text, priorities or configuration: exit 2.
    User(String),
    /// Unreadable or malformed data files: exit 3.
    Data(String),
    /// Broken invariant inside the engine: exit 4.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::User(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        })
    }

    /// Reclassifies a user error as a data error; used around file loading.
    pub fn as_data(self) -> Self {
        match self {
            CliError::User(m) => CliError::Data(m),
            other => other,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) => write!(f, "error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        let message = e.body.message.clone();
        match e.body.kind.as_str() {
            "load_error" | "io_error" => CliError::Data(message),
            "internal" => CliError::Internal(message),
            _ => CliError::User(message),
        }
    }
}

impl From<sensorsift_core::Error> for CliError {
    fn from(e: sensorsift_core::Error) -> Self {
        ApiError::from(e).into()
    }
}

impl From<sensorsift_distributed::DistError> for CliError {
    fn from(e: sensorsift_distributed::DistError) -> Self {
        ApiError::from(e).into()
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
