use std::path::Path;

use dvakit_core::batch::BatchError;
use dvakit_core::synth::SynthError;
use dvakit_core::{CurveError, FeatureError, FitError, ModelError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;

/// Every failure the toolkit reports, grouped by exit code.
#[derive(Debug, Error)]
pub enum ToolError {
    /// Malformed file content at a known line (1-based).
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    NonConvergence(String),
}

/// Machine-readable form of a [`ToolError`], written to stderr as one JSON
/// line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub exit_code: i32,
    pub message: String,
    pub input: Option<String>,
    pub line: Option<usize>,
}

impl ToolError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ToolError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Schema { .. } | ToolError::Io { .. } | ToolError::Input(_) => EXIT_INPUT,
            ToolError::NonConvergence(_) => EXIT_NON_CONVERGENCE,
            ToolError::Infeasible(_) => EXIT_INFEASIBLE,
            ToolError::Config(_) => EXIT_CONFIG,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ToolError::Schema { .. } => "schema",
            ToolError::Io { .. } => "io",
            ToolError::Input(_) => "input",
            ToolError::Config(_) => "config",
            ToolError::Infeasible(_) => "infeasible",
            ToolError::NonConvergence(_) => "non_convergence",
        }
    }

    pub fn record(&self, input: Option<&str>) -> ErrorRecord {
        let (path, line) = match self {
            ToolError::Schema { path, line, .. } => (Some(path.as_str()), Some(*line)),
            ToolError::Io { path, .. } => (Some(path.as_str()), None),
            _ => (None, None),
        };
        ErrorRecord {
            kind: self.kind().to_string(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            input: input.or(path).map(str::to_string),
            line,
        }
    }

    /// Prefixes the message with the input it concerns, keeping the kind.
    pub fn context(self, what: &str) -> Self {
        match self {
            ToolError::Input(m) => ToolError::Input(format!("{what}: {m}")),
            ToolError::Config(m) => ToolError::Config(format!("{what}: {m}")),
            ToolError::Infeasible(m) => ToolError::Infeasible(format!("{what}: {m}")),
            ToolError::NonConvergence(m) => ToolError::NonConvergence(format!("{what}: {m}")),
            other => other,
        }
    }
}

impl From<CurveError> for ToolError {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::InvalidSmoothing(_) => ToolError::Config(e.to_string()),
            _ => ToolError::Input(e.to_string()),
        }
    }
}

impl From<ModelError> for ToolError {
    fn from(e: ModelError) -> Self {
        ToolError::Infeasible(e.to_string())
    }
}

impl From<FitError> for ToolError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Curve(c) => c.into(),
            FitError::InvalidConfig(m) => ToolError::Config(m),
        }
    }
}

impl From<FeatureError> for ToolError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Model(m) => m.into(),
            FeatureError::ZeroPristine(_) => ToolError::Input(e.to_string()),
            _ => ToolError::Config(e.to_string()),
        }
    }
}

impl From<SynthError> for ToolError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Curve(c) => c.into(),
            SynthError::Fit(f) => f.into(),
            SynthError::InvalidSpec(m) => ToolError::Config(m),
            _ => ToolError::Infeasible(e.to_string()),
        }
    }
}

impl From<BatchError> for ToolError {
    fn from(e: BatchError) -> Self {
        match e {
            BatchError::Feature(f) => f.into(),
            _ => ToolError::Input(e.to_string()),
        }
    }
}
