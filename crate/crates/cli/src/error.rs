use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad scenario file or arguments. `line` is 1-based when known.
    #[error("{}", fmt_config(.line, .msg))]
    Config { line: Option<usize>, msg: String },

    /// The simulation aborted after starting.
    #[error("run aborted: {0}")]
    Runtime(byzgrad_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn fmt_config(line: &Option<usize>, msg: &str) -> String {
    match line {
        Some(l) => format!("config error at line {l}: {msg}"),
        None => format!("config error: {msg}"),
    }
}

impl CliError {
    pub fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        CliError::Config {
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for runtime
    /// aborts and I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 3,
        }
    }
}

impl From<byzgrad_core::Error> for CliError {
    fn from(e: byzgrad_core::Error) -> Self {
        if e.is_config() {
            CliError::config(None, e.to_string())
        } else {
            CliError::Runtime(e)
        }
    }
}
