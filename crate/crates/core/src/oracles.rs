//! Gradient estimators behind the value oracle, and the error-injection
//! primitive that realizes "an estimate within epsilon of the truth".

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::domain::{ErrorModel, NoiseMode, QueryLedger, SmoothObjective, Vector};
use crate::error::{invalid, QfwError, Result};

const STREAM_INJECT: u64 = 0x1A1E;
const STREAM_JORDAN: u64 = 0x10DA;

/// Outlier multiple applied on a failed Jordan estimate.
pub const JORDAN_OUTLIER_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Guarantee {
    L2 { bound: f64 },
    LInf { bound: f64, failure_prob: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub g: Vector,
    pub charged_queries: u64,
    pub guarantee: Guarantee,
    /// Set when the emulator drew the failure branch of its contract.
    pub failed: bool,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return invalid(format!("finite-difference step must be > 0, got {sigma}"));
    }
    Ok(())
}

/// `(f(x + sigma e_i) - f(x)) / sigma`, two charged queries.
pub fn fd_component(
    f: &SmoothObjective<Vector>,
    x: &Vector,
    i: usize,
    sigma: f64,
    ledger: &mut QueryLedger,
) -> Result<f64> {
    check_sigma(sigma)?;
    if i >= x.len() {
        return Err(QfwError::DimensionMismatch { expected: x.len(), got: i + 1 });
    }
    let base = f.query(x, ledger);
    let mut y = x.clone();
    y[i] += sigma;
    Ok((f.query(&y, ledger) - base) / sigma)
}

/// Full forward-difference gradient. The base value is shared, so `d + 1`
/// queries are charged. Guarantee: `||g - grad f||_2 <= sqrt(d) L sigma / 2`.
pub fn fd_gradient(
    f: &SmoothObjective<Vector>,
    x: &Vector,
    sigma: f64,
    ledger: &mut QueryLedger,
) -> Result<GradientEstimate> {
    check_sigma(sigma)?;
    let d = x.len();
    let g: Vector = Vector::from_vec(
        f.axis_increments_uncharged(x, sigma).into_iter().map(|v| v / sigma).collect(),
    );
    let q = d as u64 + 1;
    ledger.charge_function(q);
    Ok(GradientEstimate {
        g,
        charged_queries: q,
        guarantee: Guarantee::L2 { bound: (d as f64).sqrt() * f.smoothness * sigma / 2.0 },
        failed: false,
    })
}

fn argmax_abs(g: &Vector) -> usize {
    let mut best = 0;
    for i in 1..g.len() {
        if g[i].abs() > g[best].abs() {
            best = i;
        }
    }
    best
}

fn argmax(g: &Vector) -> usize {
    let mut best = 0;
    for i in 1..g.len() {
        if g[i] > g[best] {
            best = i;
        }
    }
    best
}

/// Returns `g_true` moved by at most `eps` per coordinate.
///
/// Worst case lowers the current argmax by `eps` and raises every other
/// entry by `eps`, the perturbation most likely to change the argmax.
pub fn bounded_error_inject(g_true: &Vector, eps: f64, model: &ErrorModel) -> Vector {
    assert!(eps >= 0.0, "error bound must be >= 0");
    if eps == 0.0 || g_true.is_empty() {
        return g_true.clone();
    }
    match model.mode {
        NoiseMode::Zero => g_true.clone(),
        NoiseMode::WorstCase => {
            let top = argmax(g_true);
            Vector::from_fn(g_true.len(), |i, _| {
                if i == top {
                    g_true[i] - eps
                } else {
                    g_true[i] + eps
                }
            })
        }
        NoiseMode::Uniform => {
            let mut rng = model.rng(STREAM_INJECT);
            g_true.map(|v| v + eps * rng.random_range(-1.0..=1.0))
        }
        NoiseMode::Consistent => {
            Vector::from_fn(g_true.len(), |i, _| g_true[i] + eps * model.consistent_unit(i as u64))
        }
    }
}

/// Error bound of the Jordan estimator: `8 pi d^2 (d/rho + 1) L r / rho`.
pub fn jordan_error_bound(d: usize, smoothness: f64, r: f64, rho: f64) -> f64 {
    let d = d as f64;
    8.0 * std::f64::consts::PI * d * d * (d / rho + 1.0) * smoothness * r / rho
}

/// Emulates Jordan's one-query gradient estimator by its contract: with
/// probability at least `1 - rho` every coordinate is within the bound in
/// l-infinity; otherwise one random coordinate carries an outlier of
/// `10 x` the bound. Needs the exact gradient. Charges one quantum query.
pub fn jordan_gradient_emulate(
    f: &SmoothObjective<Vector>,
    x: &Vector,
    r: f64,
    rho: f64,
    model: &ErrorModel,
    ledger: &mut QueryLedger,
) -> Result<GradientEstimate> {
    if !(r > 0.0) {
        return invalid(format!("grid radius must be > 0, got {r}"));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return invalid(format!("failure probability must be in (0, 1], got {rho}"));
    }
    let truth = f.gradient(x)?;
    let d = x.len();
    let bound = jordan_error_bound(d, f.smoothness, r, rho);
    ledger.charge_quantum(1);
    let guarantee = Guarantee::LInf { bound, failure_prob: rho };
    if model.is_zero() {
        return Ok(GradientEstimate { g: truth, charged_queries: 1, guarantee, failed: false });
    }
    let mut rng = model.rng(STREAM_JORDAN);
    let mut g = match model.mode {
        NoiseMode::WorstCase => {
            // Shrink the largest magnitude, grow all others.
            let top = argmax_abs(&truth);
            Vector::from_fn(d, |i, _| {
                let s = if truth[i] >= 0.0 { 1.0 } else { -1.0 };
                if i == top {
                    truth[i] - s * bound
                } else {
                    truth[i] + s * bound
                }
            })
        }
        NoiseMode::Uniform => truth.map(|v| v + bound * rng.random_range(-1.0..=1.0)),
        NoiseMode::Consistent => {
            Vector::from_fn(d, |i, _| truth[i] + bound * model.consistent_unit(i as u64))
        }
        NoiseMode::Zero => unreachable!(),
    };
    let failed = rng.random::<f64>() < rho;
    if failed {
        let j = rng.random_range(0..d);
        let dir: f64 = StandardNormal.sample(&mut rng);
        g[j] = truth[j] + JORDAN_OUTLIER_FACTOR * bound * dir.signum();
    }
    Ok(GradientEstimate { g, charged_queries: 1, guarantee, failed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> SmoothObjective<Vector> {
        SmoothObjective::new(|x: &Vector| 0.5 * x.norm_squared(), 1.0, 2.0)
            .unwrap()
            .with_gradient(|x: &Vector| x.clone())
    }

    #[test]
    fn fd_component_examples() {
        let f = SmoothObjective::new(|x: &Vector| x[0] * x[0], 2.0, 2.0).unwrap();
        let mut l = QueryLedger::new();
        let v = fd_component(&f, &Vector::zeros(2), 0, 0.1, &mut l).unwrap();
        assert!((v - 0.1).abs() < 1e-15);
        assert_eq!(l.totals().function_queries, 2);
        assert!(fd_component(&f, &Vector::zeros(2), 0, 0.0, &mut l).is_err());
        assert!(fd_component(&f, &Vector::zeros(2), 5, 0.1, &mut l).is_err());
    }

    #[test]
    fn fd_exact_on_affine() {
        let c = Vector::from_vec(vec![0.5, -2.0, 3.0]);
        let cc = c.clone();
        let f = SmoothObjective::new(move |x: &Vector| cc.dot(x) + 1.0, 0.0, 2.0).unwrap();
        let mut l = QueryLedger::new();
        let x = Vector::from_vec(vec![0.25, 0.5, -0.75]);
        let est = fd_gradient(&f, &x, 0.5, &mut l).unwrap();
        assert!((est.g - c).amax() < 1e-14);
        assert_eq!(l.totals().function_queries, 4);
    }

    #[test]
    fn fd_gradient_quadratic_closed_form() {
        let f = quad();
        let mut l = QueryLedger::new();
        let est = fd_gradient(&f, &Vector::from_vec(vec![1.0, 0.0]), 0.01, &mut l).unwrap();
        assert!((est.g[0] - 1.005).abs() < 1e-12);
        assert!((est.g[1] - 0.005).abs() < 1e-12);
        let Guarantee::L2 { bound } = est.guarantee else { panic!() };
        assert!((bound - 2f64.sqrt() * 0.01 / 2.0).abs() < 1e-15);
        let err = (est.g - Vector::from_vec(vec![1.0, 0.0])).norm();
        assert!(err <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn inject_examples() {
        let g = Vector::from_vec(vec![1.0, 0.9]);
        let wc = bounded_error_inject(&g, 0.06, &ErrorModel::new(NoiseMode::WorstCase, 0));
        assert!((wc[0] - 0.94).abs() < 1e-15 && (wc[1] - 0.96).abs() < 1e-15);
        let z = bounded_error_inject(&g, 0.0, &ErrorModel::new(NoiseMode::Uniform, 0));
        assert_eq!(z, g);
        let c1 = bounded_error_inject(&g, 0.1, &ErrorModel::new(NoiseMode::Consistent, 4));
        let c2 = bounded_error_inject(&g, 0.1, &ErrorModel::new(NoiseMode::Consistent, 4));
        assert_eq!(c1, c2);
    }

    #[test]
    fn jordan_charges_one_query_and_needs_gradient() {
        let f = quad();
        let mut l = QueryLedger::new();
        let x = Vector::from_vec(vec![0.3, -0.2, 0.1]);
        let m = ErrorModel::new(NoiseMode::Uniform, 5);
        let est = jordan_gradient_emulate(&f, &x, 1e-6, 1.0, &m, &mut l).unwrap();
        assert_eq!(est.charged_queries, 1);
        assert_eq!(l.totals().quantum_queries, 1);
        let no_grad = SmoothObjective::new(|x: &Vector| x.sum(), 0.0, 2.0).unwrap();
        assert_eq!(
            jordan_gradient_emulate(&no_grad, &x, 1e-6, 0.5, &m, &mut l).unwrap_err(),
            QfwError::MissingGradient
        );
        assert!(jordan_gradient_emulate(&f, &x, 1e-6, 0.0, &m, &mut l).is_err());
    }

    #[test]
    fn jordan_worst_case_uses_full_bound() {
        let f = quad();
        let mut l = QueryLedger::new();
        let x = Vector::from_vec(vec![0.3, -0.2, 0.1]);
        let m = ErrorModel::new(NoiseMode::WorstCase, 2);
        let est = jordan_gradient_emulate(&f, &x, 1e-15, 1e-3, &m, &mut l).unwrap();
        let Guarantee::LInf { bound, .. } = est.guarantee else { panic!() };
        assert!(!est.failed);
        let diff = &est.g - &x;
        assert!((diff.amax() - bound).abs() <= 1e-15);
        assert!(diff.iter().all(|v| (v.abs() - bound).abs() <= 1e-15));
        // argmax |.| entry was shrunk toward zero
        assert!(est.g[0].abs() < 0.3);
    }
}
