use std::process::ExitCode;

use thiserror::Error;
use wso_core::harness::HarnessError;
use wso_core::io::IoError;
use wso_core::maps::MapError;
use wso_core::phantom::PhantomError;
use wso_core::qp::QpError;
use wso_core::wso::WsoError;

/// Errors grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration: exit 2.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or incompatible data: exit 3.
    #[error("{0}")]
    Data(String),
    /// The dual solver gave up: exit 4.
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Data(_) => ExitCode::from(3),
            CliError::NotConverged(_) => ExitCode::from(4),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::UnknownKey { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<WsoError> for CliError {
    fn from(e: WsoError) -> Self {
        match e {
            WsoError::NotConverged { .. } | WsoError::Qp(QpError::NotConverged { .. }) => CliError::NotConverged(e.to_string()),
            WsoError::InvalidParameter(_) | WsoError::Kernel(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Training(w) => w.into(),
            HarnessError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PhantomError> for CliError {
    fn from(e: PhantomError) -> Self {
        match e {
            PhantomError::TooSmall { .. } | PhantomError::InvalidConfig(_) | PhantomError::OddCount(_) | PhantomError::UnknownGene(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<wso_core::explain::ExplainError> for CliError {
    fn from(e: wso_core::explain::ExplainError) -> Self {
        CliError::Data(e.to_string())
    }
}
