//! Command-line front end for the Frank-Wolfe solvers: single runs, grid
//! sweeps and the built-in verification suite.

pub mod config;
pub mod run;
pub mod sweep;
pub mod verify;

use qfw_core::QfwError;

/// Finite-difference schedule multiplier used by `--inject-fault`. Large
/// enough that every oracle's slack exceeds its allowance.
pub const FAULT_SIGMA_SCALE: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Degenerate(QfwError),
    Solver(QfwError),
    Io(String),
    Violation(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Solver(_) => 2,
            CliError::Io(_) | CliError::Violation(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Degenerate(e) => write!(f, "degenerate input: {e}"),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Violation(n) => write!(f, "{n} check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<QfwError> for CliError {
    fn from(e: QfwError) -> Self {
        if e.is_degenerate_input() {
            CliError::Degenerate(e)
        } else {
            CliError::Solver(e)
        }
    }
}
