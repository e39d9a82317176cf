use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while validating inputs, running a simulation or moving
/// data in and out of files.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "implicit solver stalled at t = {t}: {attempts} consecutive non-convergent attempts at the step-size floor h = {h}"
    )]
    Stalled { t: f64, h: f64, attempts: usize },

    #[error("failed to parse {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
