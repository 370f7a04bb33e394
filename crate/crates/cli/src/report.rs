use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<bvb_core::Error> for CliError {
    fn from(e: bvb_core::Error) -> Self {
        match e {
            bvb_core::Error::Inconsistent(_) => CliError::Verification(e.to_string()),
            bvb_core::Error::Io(io) => CliError::Io(io),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

pub const TOOL: Tool = Tool {
    name: "bvb",
    version: env!("CARGO_PKG_VERSION"),
};

/// Pretty JSON with a trailing newline.
pub fn render<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Prints the report and, when asked, writes the same bytes to `out`.
pub fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = render(report);
    if let Some(path) = out {
        std::fs::write(path, &text)?;
    }
    print!("{text}");
    Ok(())
}
