use std::fmt;
use std::path::Path;

use trc_core::compactness::CostError;
use trc_core::data::DataError;
use trc_core::evaluation::EvalError;
use trc_core::labeling::LabelingError;
use trc_core::optimizer::OptimizeError;
use trc_core::rules::RuleError;
use trc_core::sim::SimError;

/// Failure class, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Internal = 1,
    Input = 2,
    Resource = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Input,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Internal,
            message: message.into(),
        }
    }

    pub fn read(path: &Path, err: impl fmt::Display) -> Self {
        Self::input(format!("{}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: impl fmt::Display) -> Self {
        Self::internal(format!("cannot write {}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::input(e.to_string())
            }
        }
    )*};
}

input_errors!(DataError, LabelingError, SimError, EvalError, CostError);

impl From<RuleError> for CliError {
    fn from(e: RuleError) -> Self {
        let kind = match e {
            RuleError::GridOverflow { .. } => Kind::Resource,
            _ => Kind::Input,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Rule(r) => r.into(),
            OptimizeError::Pool(_) => Self::internal(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}
