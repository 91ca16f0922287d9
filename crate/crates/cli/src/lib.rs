//! Problem-file driver for the `jetcalc` engine.

pub mod commands;
pub mod problem;
pub mod render;

pub use commands::{run, run_text, Command, Options, Outcome};
pub use problem::{parse_problem, Diagnostic, Problem};
pub use render::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(#[from] Diagnostic),
    #[error("{context}: {msg}")]
    Derivation { context: &'static str, msg: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}
