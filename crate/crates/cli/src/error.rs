use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("empty configuration; required sections: {0}")]
    Empty(String),
    #[error("configuration does not parse: {0}")]
    Parse(String),
    #[error("[{section}] unknown key '{key}'")]
    UnknownKey { section: String, key: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("[{section}] '{key}' needs a unit suffix, one of {allowed}")]
    MissingUnit {
        section: String,
        key: String,
        allowed: String,
    },
    #[error("[{section}] '{key}' has unknown unit suffix '{suffix}', expected one of {allowed}")]
    UnknownUnit {
        section: String,
        key: String,
        suffix: String,
        allowed: String,
    },
    #[error("[{section}] {key} = {value} is out of range, expected {bounds}")]
    OutOfRange {
        section: String,
        key: String,
        value: String,
        bounds: String,
    },
    #[error("[{section}] {key}: {message}")]
    Invalid {
        section: String,
        key: String,
        message: String,
    },
    #[error("missing section [{section}], needed by {needed_by}")]
    MissingSection { section: String, needed_by: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{source}")]
    Physics {
        module: &'static str,
        source: spdc_cavity::Error,
    },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Format { .. } => "format",
            CliError::Physics { .. } => "physics",
            _ => "config",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => 2,
            "physics" => 3,
            "io" => 4,
            _ => 5,
        }
    }

    /// `error kind=<kind> [module=<module>] message="<text>"` on one line.
    pub fn machine_line(&self) -> String {
        let text = self.to_string();
        let flat = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join("; ");
        let escaped = flat.replace('\\', "\\\\").replace('"', "\\\"");
        match self {
            CliError::Physics { module, .. } => {
                format!("error kind=physics module={module} message=\"{escaped}\"")
            }
            _ => format!("error kind={} message=\"{escaped}\"", self.kind()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches the physics module name to a library error.
pub(crate) fn physics(module: &'static str) -> impl Fn(spdc_cavity::Error) -> CliError {
    move |source| CliError::Physics { module, source }
}

pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
