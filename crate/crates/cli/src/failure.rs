use std::fmt;
use std::process::ExitCode;

/// Why a command stopped, and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Exit 2. `field` is the dotted config path at fault.
    Config { field: String, reason: String },
    /// Exit 3.
    NumericalAbort(String),
    /// Exit 4: results were written but carry reliability flags.
    Unreliable(Vec<String>),
    /// Exit 1: a self-test or suite criterion failed.
    Failed(String),
}

impl Failure {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Failure::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Failed(_) => 1,
            Failure::Config { .. } => 2,
            Failure::NumericalAbort(_) => 3,
            Failure::Unreliable(_) => 4,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config { field, reason } => write!(f, "config error in `{field}`: {reason}"),
            Failure::NumericalAbort(m) => write!(f, "numerical abort: {m}"),
            Failure::Unreliable(flags) => write!(
                f,
                "results flagged unreliable ({}); rerun with --override-flags to accept them",
                flags.join(", ")
            ),
            Failure::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<hybridqm::Error> for Failure {
    fn from(e: hybridqm::Error) -> Self {
        use hybridqm::Error;
        match e {
            Error::Config { field, reason } => Failure::config(field, reason),
            Error::NormDrift { .. } => Failure::NumericalAbort(e.to_string()),
            other => Failure::config("analysis", other.to_string()),
        }
    }
}
