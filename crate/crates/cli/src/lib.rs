//! Command-line front end: JSON configs in, JSON/CSV/SVG artifacts out.

pub mod commands;
pub mod config;

use thiserror::Error;

pub use commands::{cmd_classify, cmd_ll, cmd_solve, cmd_spectrum, Options, Outcome};
pub use config::ProblemConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_LL: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sturm_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use sturm_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(
                E::InvalidParams(_)
                | E::OutOfRange(_)
                | E::Expression(_)
                | E::Csv { .. }
                | E::MissingFunctional(_)
                | E::NonPositiveProfile { .. }
                | E::OrderingViolated { .. }
                | E::EmptyCurve { .. },
            ) => EXIT_CONFIG,
            CliError::Core(E::AllTrajectoriesFailed) => EXIT_NO_SOLUTION,
            _ => EXIT_FAILURE,
        }
    }
}
