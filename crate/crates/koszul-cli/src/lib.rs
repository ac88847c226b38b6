//! Front end for `koszul-core`: an expression parser, a loader for `.kz`
//! structure files, and report emitters. The `koszul` binary is a thin
//! wrapper over these.

pub mod emit;
pub mod expr;
pub mod structure;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("line {line}: {msg}")]
    File { line: usize, msg: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] koszul_core::Error),
}

impl CliError {
    pub fn parse(pos: usize, msg: impl Into<String>) -> CliError {
        CliError::Parse {
            pos,
            msg: msg.into(),
        }
    }

    pub fn file(line: usize, msg: impl Into<String>) -> CliError {
        CliError::File {
            line,
            msg: msg.into(),
        }
    }
}
