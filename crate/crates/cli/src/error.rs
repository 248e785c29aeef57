use serde_json::{json, Value};
use spm_core::AdmissibilityReport;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_ADMISSIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("noise not admissible: {message}")]
    NotAdmissible { message: String, report: Option<Box<AdmissibilityReport>> },

    #[error("numerical failure: {0}")]
    Numerical(spm_core::Error),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { key: key.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => EXIT_CONFIG,
            Self::NotAdmissible { .. } => EXIT_NOT_ADMISSIBLE,
            Self::Numerical(_) | Self::Io { .. } => EXIT_NUMERICAL,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            Self::Config { key, .. } => v["key"] = json!(key),
            Self::NotAdmissible { report: Some(r), .. } => v["report"] = json!(r),
            Self::Numerical(spm_core::Error::StepFailure { step, residuals }) => {
                v["trace"] = json!({ "step": step, "residuals": residuals });
            }
            Self::Numerical(spm_core::Error::EnsembleFailure { failed, total, indices }) => {
                v["trace"] = json!({ "failed": failed, "total": total, "indices": indices });
            }
            _ => {}
        }
        v
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "invalid_config",
            Self::NotAdmissible { .. } => "not_admissible",
            Self::Numerical(_) => "numerical_failure",
            Self::Io { .. } => "io",
        }
    }
}

impl From<spm_core::Error> for CliError {
    fn from(e: spm_core::Error) -> Self {
        use spm_core::Error as E;
        match e {
            E::InvalidParameter { name, .. } => Self::config(name, e.to_string()),
            E::DimensionCondition { .. } => Self::config("grid.dimension", e.to_string()),
            E::NotAdmissible { .. } | E::DegenerateViscosity { .. } => {
                Self::NotAdmissible { message: e.to_string(), report: None }
            }
            other => Self::Numerical(other),
        }
    }
}
