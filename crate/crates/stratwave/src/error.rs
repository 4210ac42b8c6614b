use std::path::Path;

use stratwave_core::density::{DensityError, ParameterError};
use stratwave_core::fields::FieldError;
use stratwave_core::grid::GridError;
use stratwave_core::solver::SolverError;
use stratwave_core::spectrum::SpectrumError;
use stratwave_core::study::StudyError;
use stratwave_core::wave::WaveError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Parameters(#[from] ParameterError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Fields(#[from] FieldError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error("checks failed: {0}")]
    Checks(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        Self::Format { path: path.display().to_string(), message: message.into() }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Format { .. } => "format",
            Self::Density(_) => "density",
            Self::Parameters(_) => "parameters",
            Self::Grid(_) => "grid",
            Self::Spectrum(_) => "spectrum",
            Self::Solver(_) => "solver",
            Self::Fields(_) => "fields",
            Self::Study(_) => "study",
            Self::Wave(_) => "wave",
            Self::Checks(_) => "checks",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }

    /// One-line JSON object describing the failure.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "status": "error", "kind": self.kind(), "message": self.to_string() }).to_string()
    }
}
