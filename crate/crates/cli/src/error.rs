use std::process::ExitCode;

use gkcm::consistency::BuildError;
use gkcm::maxclique::SolveError;
use gkcm::metrics::MetricError;
use gkcm::sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {msg}")]
    Format { path: String, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Input { path: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Refused(String),
}

impl CliError {
    /// 1 usage, 2 input format, 3 infeasible or refused.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Format { .. } | CliError::Input { .. } | CliError::Io { .. } => 2,
            CliError::Refused(_) => 3,
        })
    }

    pub fn format(path: &str, line: usize, msg: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub fn input(path: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Input {
            path: path.to_string(),
            msg: msg.to_string(),
        }
    }

    pub fn io(path: &str, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::TooLarge { .. } => CliError::Refused(e.to_string()),
            SolveError::UnknownSolver(_) | SolveError::NoThreads => CliError::Usage(e.to_string()),
            _ => CliError::Refused(e.to_string()),
        }
    }
}

impl From<BuildError> for CliError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::NoThreads => CliError::Usage(e.to_string()),
            _ => CliError::Refused(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Metric(m) => m.into(),
            SimError::Build(b) => b.into(),
            SimError::Solve(s) => s.into(),
            _ => CliError::Refused(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::UnknownMetric(_) | MetricError::InvalidConfidence(_) | MetricError::InvalidDof => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Input {
                path: "measurements".into(),
                msg: e.to_string(),
            },
        }
    }
}

pub fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
