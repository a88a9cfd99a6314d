//! Frank-Wolfe solvers over sparse and low-rank constraint sets, with
//! classical emulators standing in for quantum subroutines.
//!
//! The emulators do not simulate circuits. Each one reproduces the
//! input/output contract of the subroutine it replaces: the error it is
//! allowed to make, the probability it is allowed to fail with, and the
//! number of oracle queries (or abstract time units) it is charged.

pub mod cost_model;
pub mod domain;
pub mod error;
pub mod fw_engine;
pub mod lmo_matrix;
pub mod lmo_vector;
pub mod oracles;
pub mod par;
pub mod problems;

pub use domain::{
    ConstraintSet, Costs, ErrorModel, FwPoint, Matrix, NoiseMode, QueryLedger, SmoothObjective,
    Vector,
};
pub use error::{QfwError, Result};
