use std::fmt;
use std::sync::Arc;

use super::{QueryLedger, Vector};
use crate::error::{invalid, QfwError, Result};
use crate::par::{map_range, Parallelism};

type ValueFn<X> = Arc<dyn Fn(&X) -> f64 + Send + Sync>;
type GradFn<X> = Arc<dyn Fn(&X) -> X + Send + Sync>;
type AxisFn = Arc<dyn Fn(&Vector, f64) -> Vec<f64> + Send + Sync>;

/// `C_f <= L * D^2`.
pub fn curvature_upper_bound(l: f64, d: f64) -> Result<f64> {
    if !(l >= 0.0) || !(d >= 0.0) {
        return invalid(format!("curvature bound needs L >= 0 and D >= 0, got L={l}, D={d}"));
    }
    Ok(l * d * d)
}

/// A convex, L-smooth objective behind a value oracle.
///
/// The exact gradient is optional. Quantum-variant solvers never read it
/// except where the emulated subroutine's contract is stated in terms of
/// the true gradient (the Jordan estimator, pre-stored matrix gradients),
/// and the trace uses it for duality-gap certificates.
#[derive(Clone)]
pub struct SmoothObjective<X> {
    value: ValueFn<X>,
    gradient: Option<GradFn<X>>,
    axis_increments: Option<AxisFn>,
    pub smoothness: f64,
    pub lipschitz: Option<f64>,
    pub diameter: f64,
    pub curvature_bound: f64,
    pub parallelism: Parallelism,
}

impl<X> fmt::Debug for SmoothObjective<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothObjective")
            .field("smoothness", &self.smoothness)
            .field("lipschitz", &self.lipschitz)
            .field("diameter", &self.diameter)
            .field("curvature_bound", &self.curvature_bound)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl<X: 'static> SmoothObjective<X> {
    /// Builds an objective with smoothness `l` on a set of diameter `d`.
    /// The curvature bound defaults to `l * d^2`.
    pub fn new(value: impl Fn(&X) -> f64 + Send + Sync + 'static, l: f64, d: f64) -> Result<Self> {
        let cf = curvature_upper_bound(l, d)?;
        Ok(Self {
            value: Arc::new(value),
            gradient: None,
            axis_increments: None,
            smoothness: l,
            lipschitz: None,
            diameter: d,
            curvature_bound: cf,
            parallelism: Parallelism::default(),
        })
    }

    pub fn with_gradient(mut self, g: impl Fn(&X) -> X + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_lipschitz(mut self, g: f64) -> Self {
        self.lipschitz = Some(g);
        self
    }

    /// Overrides the curvature bound with a tighter user-supplied value.
    pub fn with_curvature_bound(mut self, cf: f64) -> Result<Self> {
        if !(cf >= 0.0) || !cf.is_finite() {
            return invalid(format!("curvature bound must be finite and >= 0, got {cf}"));
        }
        self.curvature_bound = cf;
        Ok(self)
    }

    pub fn with_parallelism(mut self, p: Parallelism) -> Self {
        self.parallelism = p;
        self
    }

    /// One charged query to the value oracle.
    pub fn query(&self, x: &X, ledger: &mut QueryLedger) -> f64 {
        ledger.charge_function(1);
        (self.value)(x)
    }

    /// Evaluation outside the cost model (trace bookkeeping, emulator
    /// internals whose cost is charged by formula).
    pub fn value_uncharged(&self, x: &X) -> f64 {
        (self.value)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &X) -> Result<X> {
        match &self.gradient {
            Some(g) => Ok(g(x)),
            None => Err(QfwError::MissingGradient),
        }
    }
}

impl SmoothObjective<Vector> {
    /// Registers a closed form for `f(x + sigma e_i) - f(x)` over all `i`.
    /// Must agree with the value oracle up to rounding.
    pub fn with_axis_increments(
        mut self,
        f: impl Fn(&Vector, f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.axis_increments = Some(Arc::new(f));
        self
    }

    /// `f(x + sigma e_i) - f(x)` for every coordinate, uncharged.
    pub fn axis_increments_uncharged(&self, x: &Vector, sigma: f64) -> Vec<f64> {
        if let Some(f) = &self.axis_increments {
            return f(x, sigma);
        }
        let base = (self.value)(x);
        map_range(x.len(), self.parallelism, |i| {
            let mut y = x.clone();
            y[i] += sigma;
            (self.value)(&y) - base
        })
    }
}
