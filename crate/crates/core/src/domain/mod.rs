//! Core numeric types shared by every solver: constraint sets, objectives,
//! the query ledger and the seeded error model.

mod ledger;
mod noise;
mod objective;
pub(crate) mod sets;

pub use ledger::{Costs, QueryLedger};
pub use noise::{ErrorModel, NoiseMode};
pub use objective::{curvature_upper_bound, SmoothObjective};
pub use sets::{ConstraintSet, MEMBERSHIP_TOL};

use crate::error::Result;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

/// Operations the generic Frank-Wolfe loop needs from an iterate type.
pub trait FwPoint: Clone + Send + Sync + 'static {
    /// `(1 - gamma) * self + gamma * s`.
    fn convex_step(&self, s: &Self, gamma: f64) -> Self;
    fn inner(&self, other: &Self) -> f64;
    fn all_finite(&self) -> bool;
    /// Exact minimizer of `<s, g>` over `set`.
    fn exact_lmo(set: &ConstraintSet, g: &Self) -> Result<Self>;
    fn member_of(set: &ConstraintSet, x: &Self) -> Result<bool>;
}

impl FwPoint for Vector {
    fn convex_step(&self, s: &Self, gamma: f64) -> Self {
        self * (1.0 - gamma) + s * gamma
    }

    fn inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn exact_lmo(set: &ConstraintSet, g: &Self) -> Result<Self> {
        set.exact_lmo_vector(g)
    }

    fn member_of(set: &ConstraintSet, x: &Self) -> Result<bool> {
        set.contains_vector(x)
    }
}

impl FwPoint for Matrix {
    fn convex_step(&self, s: &Self, gamma: f64) -> Self {
        self * (1.0 - gamma) + s * gamma
    }

    fn inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn exact_lmo(set: &ConstraintSet, g: &Self) -> Result<Self> {
        set.exact_lmo_matrix(g)
    }

    fn member_of(set: &ConstraintSet, x: &Self) -> Result<bool> {
        set.contains_matrix(x)
    }
}
