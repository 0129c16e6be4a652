use thiserror::Error;

use paft_core::eval::EvalError;
use paft_core::experiment::ExperimentError;
use paft_core::forge::{ClientError, ForgeError};
use paft_core::mmd::MmdError;
use paft_core::model::ModelError;
use paft_core::sched::TrainError;
use paft_core::task::TaskError;

/// CLI failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or argument values (exit 2).
    #[error("invalid argument: {0}")]
    Invalid(String),
    /// Unreadable or malformed input files, failed writes (exit 3).
    #[error("data error: {0}")]
    Data(String),
    /// The generator endpoint failed (exit 4).
    #[error("upstream error: {0}")]
    Upstream(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Data(_) => 3,
            CliError::Upstream(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::MissingApiKey => CliError::Invalid(e.to_string()),
            other => CliError::Upstream(other.to_string()),
        }
    }
}

impl From<ForgeError> for CliError {
    fn from(e: ForgeError) -> Self {
        match e {
            ForgeError::Client(c) => c.into(),
            ForgeError::InvalidArgument(_) | ForgeError::MissingExample | ForgeError::DegeneratePartition { .. } => {
                CliError::Invalid(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        match e {
            TaskError::UnknownFamily(_) => CliError::Invalid(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Plan(_) => CliError::Invalid(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig(_) => CliError::Invalid(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidArgument(_) => CliError::Invalid(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<MmdError> for CliError {
    fn from(e: MmdError) -> Self {
        match e {
            MmdError::InvalidArgument(_) | MmdError::InvalidSize { .. } | MmdError::TooFewSamples { .. } => {
                CliError::Invalid(e.to_string())
            }
            MmdError::ShapeError(..) => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidGrid(_) | ExperimentError::InvalidSize { .. } | ExperimentError::InvalidArgument(_) => {
                CliError::Invalid(e.to_string())
            }
            ExperimentError::Forge(f) => f.into(),
            ExperimentError::Task(t) => t.into(),
            ExperimentError::Train(t) => t.into(),
            ExperimentError::Model(m) => m.into(),
            ExperimentError::Eval(v) => v.into(),
            cell @ ExperimentError::Cell { .. } => CliError::Data(cell.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
