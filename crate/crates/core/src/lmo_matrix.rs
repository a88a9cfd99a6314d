//! Top singular pair extraction: exact SVD, the classical power method, and
//! emulators for quantum singular value estimation (QTSVE) and the quantum
//! power method (QPM), each charged in abstract time units.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::domain::{ErrorModel, Matrix, NoiseMode, Vector};
use crate::error::{invalid, QfwError, Result};

const STREAM_START: u64 = 0x57A7;
const STREAM_SIGMA: u64 = 0x5161;
const STREAM_TOMO_U: u64 = 0x70A0;
const STREAM_TOMO_V: u64 = 0x70A1;
const STREAM_STEP: u64 = 0x57E9;

/// Smallest precision the emulators accept before clamping.
pub const PRECISION_FLOOR: f64 = 1e-12;
/// Top singular value the QPM emulator rescales its input to.
pub const QPM_SCALED_SIGMA: f64 = 0.9;
/// Default power-method constant `C0` in `k = C0 sigma1 ln d / eps`.
pub const DEFAULT_C0: f64 = 8.0;
/// Exponent of `ln d` standing in for the polylog factors of the cost formulas.
pub const POLYLOG_EXPONENT: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriple {
    pub sigma_hat: f64,
    pub u: Vector,
    pub v: Vector,
    pub charged_cost: f64,
    pub sigma_precision: f64,
    pub vector_precision: f64,
    /// Power iterations per chain (zero for non-iterative routines).
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum StartVector {
    /// Normalized all-ones vector, the classical stand-in for a uniform superposition.
    #[default]
    Ones,
    /// Uniformly random direction drawn from the error model's stream.
    UniformSphere,
}

/// Singular values, U and V with columns sorted by decreasing singular value.
pub fn svd_sorted(m: &Matrix) -> (Vec<f64>, Matrix, Matrix) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = Matrix::from_columns(&order.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let v_sorted =
        Matrix::from_columns(&order.iter().map(|&i| vt.row(i).transpose()).collect::<Vec<_>>());
    (sigma, u_sorted, v_sorted)
}

/// Singular values in decreasing order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Flips `(u, v)` together so the first nonzero entry of `u` is positive.
fn canonical_sign(u: &mut Vector, v: &mut Vector) {
    if let Some(first) = u.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            u.neg_mut();
            v.neg_mut();
        }
    }
}

fn unit(n: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[i] = 1.0;
    e
}

/// Exact top singular triple by full SVD.
pub fn exact_top_pair(m: &Matrix) -> Result<SingularTriple> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(QfwError::EmptyDomain);
    }
    let (sigma, u, v) = svd_sorted(m);
    let (mut u1, mut v1) = if sigma[0] > 0.0 {
        (u.column(0).into_owned(), v.column(0).into_owned())
    } else {
        (unit(m.nrows(), 0), unit(m.ncols(), 0))
    };
    canonical_sign(&mut u1, &mut v1);
    Ok(SingularTriple {
        sigma_hat: sigma[0],
        u: u1,
        v: v1,
        charged_cost: 0.0,
        sigma_precision: 0.0,
        vector_precision: 0.0,
        iterations: 0,
    })
}

fn start_vector(n: usize, start: StartVector, rng: &mut ChaCha8Rng) -> Vector {
    match start {
        StartVector::Ones => Vector::from_element(n, 1.0 / (n as f64).sqrt()),
        StartVector::UniformSphere => loop {
            let z = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
            let norm = z.norm();
            if norm > 0.0 {
                break z / norm;
            }
        },
    }
}

/// `M^T M z` (right chain) or `M M^T z` (left chain).
fn gram_apply(m: &Matrix, z: &Vector, left: bool) -> Vector {
    if left {
        m * (m.tr_mul(z))
    } else {
        m.tr_mul(&(m * z))
    }
}

/// Start vectors for the left and right chains.
fn chain_starts(m: &Matrix, start: StartVector, model: &ErrorModel) -> (Vector, Vector) {
    let mut rng = model.rng(STREAM_START);
    let zl = start_vector(m.nrows(), start, &mut rng);
    let zr = start_vector(m.ncols(), start, &mut rng);
    (zl, zr)
}

/// Runs `k` normalized steps of both power chains from the chosen start.
/// Returns `(u, v)`, the left and right chain endpoints.
pub fn power_iterations(m: &Matrix, k: usize, start: StartVector, model: &ErrorModel) -> Result<(Vector, Vector)> {
    let (mut zl, mut zr) = chain_starts(m, start, model);
    for _ in 0..k {
        zl = normalized(gram_apply(m, &zl, true))?;
        zr = normalized(gram_apply(m, &zr, false))?;
    }
    Ok((zl, zr))
}

fn normalized(z: Vector) -> Result<Vector> {
    let n = z.norm();
    if !(n > 1e-300) || !n.is_finite() {
        return Err(QfwError::ChainCollapse(n));
    }
    Ok(z / n)
}

/// Flips `u` if needed so `u^T M v >= 0` and returns that value.
fn align(m: &Matrix, u: &mut Vector, v: &Vector) -> f64 {
    let val = u.dot(&(m * v));
    if val < 0.0 {
        u.neg_mut();
        -val
    } else {
        val
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub c0: f64,
    /// Upper estimate of sigma1 used to size `k`; defaults to `||M||_F`.
    pub sigma_hint: Option<f64>,
    pub start: StartVector,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { c0: DEFAULT_C0, sigma_hint: None, start: StartVector::UniformSphere }
    }
}

/// `k = ceil(C0 sigma ln d / eps)`, at least 1.
pub fn power_iteration_count(c0: f64, sigma: f64, d: usize, eps: f64) -> usize {
    ((c0 * sigma * (d as f64).ln() / eps).ceil() as usize).max(1)
}

/// Classical power method on both Gram chains with Rayleigh estimate
/// `u^T M v`. Charged `k * rows * cols` flops.
pub fn power_method_classical(m: &Matrix, eps: f64, opts: &PowerOptions, model: &ErrorModel) -> Result<SingularTriple> {
    if !(eps > 0.0) {
        return invalid(format!("power-method precision must be > 0, got {eps}"));
    }
    let d = m.nrows().max(m.ncols());
    let sigma_est = opts.sigma_hint.unwrap_or_else(|| m.norm());
    let k = power_iteration_count(opts.c0, sigma_est, d, eps);
    let (mut u, v) = power_iterations(m, k, opts.start, model)?;
    let sigma_hat = align(m, &mut u, &v);
    Ok(SingularTriple {
        sigma_hat,
        u,
        v,
        charged_cost: (k * m.nrows() * m.ncols()) as f64,
        sigma_precision: eps,
        vector_precision: f64::NAN,
        iterations: k,
    })
}

/// Matvecs used by `power_method_classical` for `k` iterations (two per
/// Gram step, two chains).
pub fn power_matvecs(k: usize) -> u64 {
    4 * k as u64
}

/// Unit vector at chord distance `dist` from unit `z`, in a direction
/// drawn from `rng` orthogonal to `z`.
fn perturb_unit(z: &Vector, dist: f64, rng: &mut ChaCha8Rng) -> Vector {
    if dist <= 0.0 || z.len() < 2 {
        return z.clone();
    }
    let w = loop {
        let g = Vector::from_fn(z.len(), |_, _| StandardNormal.sample(rng));
        let t = &g - z * z.dot(&g);
        let n = t.norm();
        if n > 1e-12 {
            break t / n;
        }
    };
    rotate_toward(z, &w, dist)
}

/// `cos(theta) z + sin(theta) w` with chord length `2 sin(theta/2) = dist`.
fn rotate_toward(z: &Vector, w: &Vector, dist: f64) -> Vector {
    let theta = 2.0 * (dist.min(2.0) / 2.0).asin();
    let out = z * theta.cos() + w * theta.sin();
    let n = out.norm();
    out / n
}

/// Distance the current mode places an error at, given its bound.
fn error_magnitude(bound: f64, model: &ErrorModel, item: u64, rng: &mut ChaCha8Rng) -> f64 {
    match model.mode {
        NoiseMode::Zero => 0.0,
        NoiseMode::WorstCase => bound,
        NoiseMode::Uniform => bound * rng.random::<f64>(),
        NoiseMode::Consistent => bound * model.consistent_unit(item).abs(),
    }
}

/// Abstract time of QTSVE plus tomography:
/// `||M||_F d ln(d)^3 / (sqrt(p) eps delta^2)`.
pub fn qtsve_cost(frobenius: f64, d: usize, p: f64, eps: f64, delta: f64) -> f64 {
    let eps = eps.max(PRECISION_FLOOR);
    let delta = delta.max(PRECISION_FLOOR);
    frobenius * d as f64 * (d as f64).ln().powi(POLYLOG_EXPONENT) / (p.sqrt() * eps * delta * delta)
}

/// Emulated QTSVE top-pair extraction with singular value precision `eps`
/// and vector precision `delta`.
///
/// Requires `eps <= (sigma1 - sigma2) / 2`, which makes the top of the
/// perturbed spectrum the true top. Singular values are perturbed within
/// `eps` (consistently per seed and index in consistent mode), singular
/// vectors by a tangent rotation within `delta`.
pub fn qtsve_emulate(m: &Matrix, eps: f64, delta: f64, model: &ErrorModel) -> Result<SingularTriple> {
    if !(0.0..1.0).contains(&delta) {
        return invalid(format!("vector precision must be in (0, 1), got {delta}"));
    }
    if !(eps >= 0.0) {
        return invalid(format!("singular value precision must be >= 0, got {eps}"));
    }
    let (sigma, u, v) = svd_sorted(m);
    let s1 = sigma[0];
    let s2 = sigma.get(1).copied().unwrap_or(0.0);
    if eps > (s1 - s2) / 2.0 * (1.0 + 1e-12) {
        return Err(QfwError::Precondition(format!(
            "precision {eps:e} exceeds half the spectral gap ({s1:e} - {s2:e}) / 2"
        )));
    }
    let mut rng = model.rng(STREAM_SIGMA);
    let perturbed: Vec<f64> = sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let off = match model.mode {
                NoiseMode::Zero => 0.0,
                NoiseMode::WorstCase => {
                    if i == 0 {
                        -eps
                    } else {
                        eps
                    }
                }
                NoiseMode::Uniform => eps * rng.random_range(-1.0..=1.0),
                NoiseMode::Consistent => eps * model.consistent_unit(i as u64),
            };
            (s + off).max(0.0)
        })
        .collect();
    let mut top = 0;
    for i in 1..perturbed.len() {
        if perturbed[i] > perturbed[top] {
            top = i;
        }
    }
    let (mut ut, mut vt) = if s1 > 0.0 {
        (u.column(top).into_owned(), v.column(top).into_owned())
    } else {
        (unit(m.nrows(), 0), unit(m.ncols(), 0))
    };
    canonical_sign(&mut ut, &mut vt);
    let mut ru = model.rng(STREAM_TOMO_U);
    let mut rv = model.rng(STREAM_TOMO_V);
    let du = error_magnitude(delta, model, 0, &mut ru);
    let dv = error_magnitude(delta, model, 1, &mut rv);
    let u_hat = perturb_unit(&ut, du, &mut ru);
    let v_hat = perturb_unit(&vt, dv, &mut rv);
    let frob = m.norm();
    let total_sq: f64 = sigma.iter().map(|s| s * s).sum();
    let p = if total_sq > 0.0 { s1 * s1 / total_sq } else { 1.0 };
    let d = m.nrows().max(m.ncols());
    Ok(SingularTriple {
        sigma_hat: perturbed[top],
        u: u_hat,
        v: v_hat,
        charged_cost: qtsve_cost(frob, d, p, eps, delta),
        sigma_precision: eps,
        vector_precision: delta,
        iterations: 0,
    })
}

/// Unit vector within `eps_step` of `Mz / ||Mz||`, and its charged time
/// `||M||_F ln(1/eps_step) / gamma` with `gamma = ||Mz||`.
pub fn noisy_unit_matvec(m: &Matrix, z: &Vector, eps_step: f64, model: &ErrorModel) -> Result<(Vector, f64)> {
    if !(eps_step >= 0.0) {
        return invalid(format!("step precision must be >= 0, got {eps_step}"));
    }
    if ((z.norm() - 1.0).abs()) > 1e-9 {
        return invalid("input to a unit matvec must have norm 1");
    }
    let y = m * z;
    let gamma = y.norm();
    if !(gamma > 0.0) {
        return Err(QfwError::ChainCollapse(gamma));
    }
    let exact = y / gamma;
    let mut rng = model.rng(STREAM_STEP);
    let dist = error_magnitude(eps_step, model, 0, &mut rng);
    let out = perturb_unit(&exact, dist, &mut rng);
    let cost = m.norm() * (1.0 / eps_step.max(PRECISION_FLOOR)).ln().max(0.0) / gamma;
    Ok((out, cost))
}

/// Side-by-side unnormalized chains `z_{i+1} = M z_i` and
/// `z~_{i+1} = M z~_i + e_i` with `||e_i|| <= eps_step`.
/// Returns `(clean, noisy)` after `steps` steps.
pub fn additive_error_chain(
    m: &Matrix,
    z0: &Vector,
    steps: usize,
    eps_step: f64,
    model: &ErrorModel,
) -> (Vector, Vector) {
    let mut rng = model.rng(STREAM_STEP);
    let mut clean = z0.clone();
    let mut noisy = z0.clone();
    for i in 0..steps {
        clean = m * &clean;
        noisy = m * &noisy;
        let dir = loop {
            let g = Vector::from_fn(z0.len(), |_, _| StandardNormal.sample(&mut rng));
            let n = g.norm();
            if n > 0.0 {
                break g / n;
            }
        };
        noisy += dir * error_magnitude(eps_step, model, i as u64, &mut rng);
    }
    (clean, noisy)
}

/// `(s^L - 1) / (s - 1) * eps`, the accumulated-error bound of an
/// `L`-step chain with operator norm `s` (`L * eps` at `s = 1`).
pub fn accumulation_bound(sigma_max: f64, steps: usize, eps_step: f64) -> f64 {
    if (sigma_max - 1.0).abs() < 1e-15 {
        steps as f64 * eps_step
    } else {
        (sigma_max.powi(steps as i32) - 1.0) / (sigma_max - 1.0) * eps_step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpmOutput {
    /// `u` from the left chain, `v` from the right chain.
    pub triple: SingularTriple,
    /// Smallest `||M_s^T M_s z||` over unit chain vectors `z`, in rescaled units.
    pub gamma_min: f64,
    pub eps_step: f64,
    /// Final chain deviation from the noise-free chain, before tomography.
    pub deviation_left: f64,
    pub deviation_right: f64,
}

fn qpm_scale(m: &Matrix) -> Result<(f64, f64)> {
    let s1 = singular_values(m)[0];
    if !(s1 > 1e-300) {
        return Err(QfwError::ChainCollapse(s1));
    }
    Ok((s1, QPM_SCALED_SIGMA / s1))
}

/// Noise-free QPM chains: returns `gamma_min` (rescaled units) for `k` steps.
pub fn qpm_profile(m: &Matrix, k: usize, start: StartVector, model: &ErrorModel) -> Result<f64> {
    let (_, scale) = qpm_scale(m)?;
    let (mut zl, mut zr) = chain_starts(m, start, model);
    let mut gmin = f64::INFINITY;
    for _ in 0..k {
        let yl = gram_apply(m, &zl, true);
        let yr = gram_apply(m, &zr, false);
        gmin = gmin.min(yl.norm() * scale * scale).min(yr.norm() * scale * scale);
        zl = normalized(yl)?;
        zr = normalized(yr)?;
    }
    if gmin < PRECISION_FLOOR {
        return Err(QfwError::ChainCollapse(gmin));
    }
    Ok(gmin)
}

/// Per-step error budget that keeps a `k`-step chain with contraction
/// `s = 0.81` within `delta`: `delta (1 - s) / (1 - s^k)`.
pub fn qpm_step_budget(delta: f64, k: usize) -> f64 {
    let s = QPM_SCALED_SIGMA * QPM_SCALED_SIGMA;
    delta * (1.0 - s) / (1.0 - s.powi(k as i32))
}

/// Abstract time of one QPM chain followed by tomography:
/// `k ||M_s||_F ln(1/delta) / ((1 - 0.9) gamma_min) * d ln d / delta'^2`.
pub fn qpm_chain_cost(frob_scaled: f64, k: usize, delta: f64, delta_tomo: f64, gamma_min: f64, d: usize) -> f64 {
    let delta = delta.max(PRECISION_FLOOR);
    let delta_tomo = delta_tomo.max(PRECISION_FLOOR);
    let unitary = k as f64 * frob_scaled * (1.0 / delta).ln() / ((1.0 - QPM_SCALED_SIGMA) * gamma_min);
    unitary * d as f64 * (d as f64).ln() / (delta_tomo * delta_tomo)
}

/// Emulated quantum power method: `k` noisy normalized Gram steps on each
/// chain (rescaled so sigma1 = 0.9), accumulated chain error within
/// `delta`, then tomography within `delta_tomo`. The reported value is the
/// Rayleigh quotient on the original matrix.
pub fn qpm_emulate(
    m: &Matrix,
    k: usize,
    delta: f64,
    delta_tomo: f64,
    start: StartVector,
    model: &ErrorModel,
) -> Result<QpmOutput> {
    if k == 0 {
        return invalid("power method needs at least one step");
    }
    for (name, val) in [("chain", delta), ("tomography", delta_tomo)] {
        if !(0.0..1.0).contains(&val) {
            return invalid(format!("{name} precision must be in [0, 1), got {val}"));
        }
    }
    let (_, scale) = qpm_scale(m)?;
    let eps_step = qpm_step_budget(delta, k);
    let (zl0, zr0) = chain_starts(m, start, model);
    let mut clean = [zl0.clone(), zr0.clone()];
    let mut noisy = [zl0, zr0];
    let mut gmin = f64::INFINITY;
    let mut rng = model.rng(STREAM_STEP);
    for step in 0..k {
        for side in 0..2 {
            let left = side == 0;
            let yc = gram_apply(m, &clean[side], left);
            gmin = gmin.min(yc.norm() * scale * scale);
            clean[side] = normalized(yc)?;
            let yn = gram_apply(m, &noisy[side], left);
            gmin = gmin.min(yn.norm() * scale * scale);
            let exact = normalized(yn)?;
            let item = (step as u64) << 1 | side as u64;
            let dist = error_magnitude(eps_step, model, item, &mut rng);
            noisy[side] = perturb_unit(&exact, dist, &mut rng);
        }
    }
    if gmin < PRECISION_FLOOR {
        return Err(QfwError::ChainCollapse(gmin));
    }
    let mut devs = [0.0; 2];
    for side in 0..2 {
        let dev = (&noisy[side] - &clean[side]).norm();
        if dev > delta && dev > 0.0 {
            // Pull back onto the delta-sphere around the clean endpoint.
            let c = &clean[side];
            let t = &noisy[side] - c * c.dot(&noisy[side]);
            let tn = t.norm();
            if tn > 0.0 {
                noisy[side] = rotate_toward(c, &(t / tn), delta);
            } else {
                noisy[side] = c.clone();
            }
        }
        devs[side] = (&noisy[side] - &clean[side]).norm();
    }
    let mut ru = model.rng(STREAM_TOMO_U);
    let mut rv = model.rng(STREAM_TOMO_V);
    let du = error_magnitude(delta_tomo, model, 0, &mut ru);
    let dv = error_magnitude(delta_tomo, model, 1, &mut rv);
    let mut u = perturb_unit(&noisy[0], du, &mut ru);
    let v = perturb_unit(&noisy[1], dv, &mut rv);
    let sigma_hat = align(m, &mut u, &v);
    let frob_scaled = m.norm() * scale;
    let cost = qpm_chain_cost(frob_scaled, k, delta, delta_tomo, gmin, m.nrows())
        + qpm_chain_cost(frob_scaled, k, delta, delta_tomo, gmin, m.ncols());
    Ok(QpmOutput {
        triple: SingularTriple {
            sigma_hat,
            u,
            v,
            charged_cost: cost,
            sigma_precision: f64::NAN,
            vector_precision: delta + delta_tomo,
            iterations: k,
        },
        gamma_min: gmin,
        eps_step,
        deviation_left: devs[0],
        deviation_right: devs[1],
    })
}
