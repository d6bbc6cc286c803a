use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One violated constraint of an experiment config.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigIssue {
    /// Dotted path of the offending key, e.g. `grid.x.cells`.
    pub field: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigIssue {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn bullet_list(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {path}: {message}")]
    Syntax { path: String, message: String },

    #[error("{} configuration error(s):\n{}", .0.len(), bullet_list(.0))]
    Invalid(Vec<ConfigIssue>),

    #[error("unknown recipe `{0}` (see `kresnet list-recipes`)")]
    UnknownRecipe(String),

    #[error("{path}:{line}: {message}")]
    Input { path: String, line: usize, message: String },

    #[error("{path}: {message}")]
    BadFile { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),

    #[error("cannot serialise config: {0}")]
    TomlOut(#[from] toml::ser::Error),

    #[error(transparent)]
    Core(#[from] kresnet_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for anything the user must fix in the config
    /// or its inputs, 1 for failures during the computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Syntax { .. }
            | CliError::Invalid(_)
            | CliError::UnknownRecipe(_)
            | CliError::Input { .. }
            | CliError::BadFile { .. } => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
