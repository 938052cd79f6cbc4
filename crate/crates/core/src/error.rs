use thiserror::Error;

use crate::agent::AgentError;
use crate::harness::HarnessError;
use crate::nn::NnError;
use crate::pid::PidError;
use crate::plant::PlantError;
use crate::tuners::relay::RelayError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Pid(#[from] PidError),
    #[error(transparent)]
    Relay(#[from] RelayError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable snake_case tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Plant(_) => "plant",
            Error::Pid(_) => "pid",
            Error::Relay(RelayError::NoOscillation { .. }) => "no_oscillation",
            Error::Relay(RelayError::NotConverged { .. }) => "not_converged",
            Error::Relay(_) => "relay",
            Error::Nn(_) => "checkpoint",
            Error::Agent(_) => "agent",
            Error::Harness(HarnessError::Config(_)) => "config",
            Error::Harness(HarnessError::MissingInput(_)) => "missing_input",
            Error::Harness(_) => "harness",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
