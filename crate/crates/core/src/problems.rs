//! Seeded test problems with known smoothness, diameter and a reference
//! optimum, plus brute-force oracles used to check the LMOs.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::domain::{ConstraintSet, Matrix, SmoothObjective, Vector};
use crate::error::{invalid, QfwError, Result};
use crate::fw_engine::exact_fw_run;
use crate::lmo_matrix::{singular_values, svd_sorted};
use crate::lmo_vector::{dual_exponent, LmoResult};

/// Rounds of exact Frank-Wolfe behind a `long_run` reference.
pub const LONG_RUN_ROUNDS: usize = 20_000;
/// Extra relative tolerance granted when the reference comes from a long run.
pub const LONG_RUN_SLACK: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    BruteForce,
    LongRun,
}

/// Reference value of `min f` over the set. A `long_run` value is an upper
/// bound on the true minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub value: f64,
    pub provenance: Provenance,
}

impl Reference {
    /// Tolerance for "within eps of the optimum" against this reference.
    pub fn tolerance(&self, eps: f64) -> f64 {
        match self.provenance {
            Provenance::LongRun => eps * (1.0 + LONG_RUN_SLACK),
            _ => eps,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemInstance<X> {
    pub name: &'static str,
    pub objective: SmoothObjective<X>,
    pub set: ConstraintSet,
    pub reference: Reference,
    pub start: X,
    pub seed: u64,
}

impl<X: crate::FwPoint> ProblemInstance<X> {
    /// Replaces the reference by the best value of a long exact run, if lower.
    pub fn refine_reference(&mut self, rounds: usize) -> Result<()> {
        let run = exact_fw_run(&self.objective, &self.set, self.start.clone(), rounds)?;
        let best = run.rows.iter().map(|r| r.f_value).fold(f64::INFINITY, f64::min);
        if self.reference.provenance == Provenance::LongRun && best < self.reference.value {
            self.reference.value = best;
        }
        Ok(())
    }
}

fn long_run_reference<X: crate::FwPoint>(
    objective: &SmoothObjective<X>,
    set: &ConstraintSet,
    start: &X,
) -> Result<Reference> {
    let run = exact_fw_run(objective, set, start.clone(), LONG_RUN_ROUNDS)?;
    let best = run.rows.iter().map(|r| r.f_value).fold(objective.value_uncharged(start), f64::min);
    Ok(Reference { value: best, provenance: Provenance::LongRun })
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `f(x) = ||A x - b||^2 / 2` on the l1 ball of radius `radius`, with
/// `L = sigma_max(A)^2`.
pub fn least_squares_from(a: Matrix, b: Vector, radius: f64) -> Result<ProblemInstance<Vector>> {
    if a.nrows() != b.len() {
        return Err(QfwError::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    let d = a.ncols();
    let set = ConstraintSet::l1_ball(d, radius)?;
    let l = singular_values(&a)[0].powi(2);
    let a = Arc::new(a);
    let b = Arc::new(b);
    let col_sq: Arc<Vec<f64>> = Arc::new(a.column_iter().map(|c| c.norm_squared()).collect());
    let (av, bv) = (a.clone(), b.clone());
    let (ag, bg) = (a.clone(), b.clone());
    let (ai, bi) = (a.clone(), b.clone());
    let objective = SmoothObjective::new(move |x: &Vector| 0.5 * (&*av * x - &*bv).norm_squared(), l, set.diameter())?
        .with_gradient(move |x: &Vector| ag.tr_mul(&(&*ag * x - &*bg)))
        .with_axis_increments(move |x: &Vector, sigma: f64| {
            let r = &*ai * x - &*bi;
            let atr = ai.tr_mul(&r);
            (0..x.len()).map(|i| sigma * atr[i] + 0.5 * sigma * sigma * col_sq[i]).collect()
        });
    let start = Vector::zeros(d);
    let reference = if b.iter().all(|v| *v == 0.0) {
        Reference { value: 0.0, provenance: Provenance::ClosedForm }
    } else {
        long_run_reference(&objective, &set, &start)?
    };
    Ok(ProblemInstance { name: "least_squares_l1", objective, set, reference, start, seed: 0 })
}

/// Least squares with a planted sparse solution `x0`, `||x0||_1 = 0.8 r`.
/// `A` has Gaussian entries scaled so that `sigma_max(A) = 1`. With zero
/// noise the optimum is 0 (closed form); otherwise a long exact run.
pub fn make_least_squares_l1(
    d: usize,
    n_rows: usize,
    sparsity: usize,
    noise: f64,
    radius: f64,
    seed: u64,
) -> Result<ProblemInstance<Vector>> {
    if d == 0 || n_rows == 0 {
        return invalid("least squares needs d >= 1 and n_rows >= 1");
    }
    if sparsity == 0 || sparsity > d {
        return invalid(format!("sparsity must be in 1..={d}, got {sparsity}"));
    }
    if !(noise >= 0.0) {
        return invalid(format!("noise must be >= 0, got {noise}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = loop {
        let a = gaussian_matrix(n_rows, d, &mut rng);
        let smax = singular_values(&a)[0];
        if smax > 1e-12 && smax.is_finite() {
            break a / smax;
        }
    };
    let mut x0 = Vector::zeros(d);
    for i in sample(&mut rng, d, sparsity).iter() {
        let mag: f64 = rng.random_range(0.5..1.5);
        x0[i] = if rng.random::<bool>() { mag } else { -mag };
    }
    x0 *= 0.8 * radius / x0.lp_norm(1);
    let mut b = &a * &x0;
    if noise > 0.0 {
        for v in b.iter_mut() {
            *v += noise * Distribution::<f64>::sample(&StandardNormal, &mut rng);
        }
    }
    let zero_noise = noise == 0.0;
    let mut inst = least_squares_from(a, b, radius)?;
    if zero_noise {
        inst.reference = Reference { value: 0.0, provenance: Provenance::ClosedForm };
    }
    inst.seed = seed;
    Ok(inst)
}

fn centered_quadratic(y: Vector, set: &ConstraintSet) -> Result<SmoothObjective<Vector>> {
    let y = Arc::new(y);
    let (yv, yg, yi) = (y.clone(), y.clone(), y.clone());
    Ok(SmoothObjective::new(move |x: &Vector| 0.5 * (x - &*yv).norm_squared(), 1.0, set.diameter())?
        .with_gradient(move |x: &Vector| x - &*yg)
        .with_axis_increments(move |x: &Vector, sigma: f64| {
            (0..x.len()).map(|i| sigma * (x[i] - yi[i]) + 0.5 * sigma * sigma).collect()
        }))
}

/// `f(x) = ||x - y||^2 / 2` on the l1 ball with `||y||_1 = 0.5 r`, so the
/// optimum is 0. Cheap to evaluate at any dimension.
pub fn make_l1_quadratic(d: usize, radius: f64, seed: u64) -> Result<ProblemInstance<Vector>> {
    let set = ConstraintSet::l1_ball(d, radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let n = y.lp_norm(1);
    if n > 0.0 {
        y *= 0.5 * radius / n;
    }
    let objective = centered_quadratic(y, &set)?;
    Ok(ProblemInstance {
        name: "l1_quadratic",
        objective,
        start: Vector::zeros(d),
        set,
        reference: Reference { value: 0.0, provenance: Provenance::ClosedForm },
        seed,
    })
}

/// `f(x) = ||x - y||^2 / 2` on the simplex with `y` in the relative
/// interior; optimum 0, `L = 1`.
pub fn make_simplex_quadratic(d: usize, seed: u64) -> Result<ProblemInstance<Vector>> {
    ConstraintSet::simplex(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Vector::from_fn(d, |_, _| rng.random_range(0.1..1.0));
    let y = &w / w.sum();
    simplex_quadratic_at(y, seed)
}

/// Simplex quadratic centered at a caller-chosen point of the simplex.
pub fn simplex_quadratic_at(y: Vector, seed: u64) -> Result<ProblemInstance<Vector>> {
    let set = ConstraintSet::simplex(y.len())?;
    if !set.contains_vector(&y)? {
        return invalid("center must lie in the simplex");
    }
    let start = set.default_start_vector();
    let objective = centered_quadratic(y, &set)?;
    Ok(ProblemInstance {
        name: "simplex_quadratic",
        objective,
        set,
        reference: Reference { value: 0.0, provenance: Provenance::ClosedForm },
        start,
        seed,
    })
}

/// Euclidean projection onto `{x : ||x||_1 <= radius}` by sorting.
pub fn project_l1(v: &Vector, radius: f64) -> Vector {
    if v.lp_norm(1) <= radius {
        return v.clone();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (j as f64 + 1.0);
        if m - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// Quadratic `||x - y||^2 / 2` over a latent group ball with `y = scale * y0`
/// where `y0` is a planted point of group norm at most `0.8 r`.
///
/// `scale <= 1` keeps `y` feasible (optimum 0). Outside the ball, disjoint
/// groups with `p = 2` get an exact reference: a grid over how the radius
/// is split between two groups, or the closed-form group shrinkage for
/// more groups. Anything else falls back to a long exact run.
pub fn make_group_instance(
    d: usize,
    groups: Vec<Vec<usize>>,
    p_norms: Vec<f64>,
    radius: f64,
    scale: f64,
    seed: u64,
) -> Result<ProblemInstance<Vector>> {
    if !(scale > 0.0) {
        return invalid(format!("scale must be > 0, got {scale}"));
    }
    let set = ConstraintSet::latent_group_ball(d, groups.clone(), p_norms.clone(), radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..groups.len()).map(|_| rng.random_range(0.2..1.0)).collect();
    let wsum: f64 = w.iter().sum();
    let mut y = Vector::zeros(d);
    for (gi, g) in groups.iter().enumerate() {
        let mut atom = Vector::zeros(d);
        for &i in g {
            atom[i] = rng.random_range(-1.0..1.0);
        }
        let n = crate::domain::sets::lp_norm(g.iter().map(|&i| &atom[i]), p_norms[gi]);
        if n > 0.0 {
            y += atom * (0.8 * radius * w[gi] / wsum / n);
        }
    }
    y *= scale;
    let objective = centered_quadratic(y.clone(), &set)?;
    let start = Vector::zeros(d);
    let all_l2 = p_norms.iter().all(|&p| p == 2.0);
    let reference = if scale <= 1.0 {
        Reference { value: 0.0, provenance: Provenance::ClosedForm }
    } else if set.groups_disjoint() && all_l2 && groups.len() == 2 {
        let n0 = groups[0].iter().map(|&i| y[i] * y[i]).sum::<f64>().sqrt();
        let n1 = groups[1].iter().map(|&i| y[i] * y[i]).sum::<f64>().sqrt();
        let rest: f64 = 0.5 * (y.norm_squared() - n0 * n0 - n1 * n1);
        let steps = 200_000;
        let best = (0..=steps)
            .map(|j| {
                let t0 = radius * j as f64 / steps as f64;
                let t1 = radius - t0;
                0.5 * (n0 - t0).max(0.0).powi(2) + 0.5 * (n1 - t1).max(0.0).powi(2)
            })
            .fold(f64::INFINITY, f64::min);
        Reference { value: best + rest, provenance: Provenance::BruteForce }
    } else if set.groups_disjoint() && all_l2 {
        let norms = Vector::from_iterator(
            groups.len(),
            groups.iter().map(|g| g.iter().map(|&i| y[i] * y[i]).sum::<f64>().sqrt()),
        );
        let shrunk = project_l1(&norms, radius);
        let value = 0.5 * (&norms - shrunk).norm_squared();
        Reference { value, provenance: Provenance::ClosedForm }
    } else {
        long_run_reference(&objective, &set, &start)?
    };
    Ok(ProblemInstance { name: "group_quadratic", objective, set, reference, start, seed })
}

/// `d x rank` matrix with orthonormal columns.
fn orthonormal_columns(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let g = gaussian_matrix(d, rank, rng);
        let q = g.clone().qr().q();
        let ok = (q.tr_mul(&q) - Matrix::identity(rank, rank)).amax() < 1e-10;
        if ok {
            return q.columns(0, rank).into_owned();
        }
    }
}

/// Matrix completion `f(X) = sum_{(i,j) in Omega} (X_ij - Y_ij)^2` over the
/// nuclear ball of radius `r`. `Y = sum_k s_k u_k v_k^T` with
/// `sum_k s_k = 0.9 r`, so the optimum is 0; `Omega` is Bernoulli with
/// rate `obs_fraction` (never empty). Gradient `2 (X - Y)` on `Omega`, `L = 2`.
pub fn make_matrix_completion(
    d: usize,
    rank: usize,
    obs_fraction: f64,
    radius: f64,
    seed: u64,
) -> Result<ProblemInstance<Matrix>> {
    if rank == 0 || rank > d {
        return invalid(format!("rank must be in 1..={d}, got {rank}"));
    }
    if !(obs_fraction > 0.0 && obs_fraction <= 1.0) {
        return invalid(format!("observed fraction must be in (0, 1], got {obs_fraction}"));
    }
    let set = ConstraintSet::nuclear_ball(d, d, radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = orthonormal_columns(d, rank, &mut rng);
    let v = orthonormal_columns(d, rank, &mut rng);
    let s: Vec<f64> = (0..rank).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = s.iter().sum();
    let mut y = Matrix::zeros(d, d);
    for k in 0..rank {
        y += u.column(k) * v.column(k).transpose() * (0.9 * radius * s[k] / total);
    }
    let mut mask = Matrix::from_fn(d, d, |_, _| if rng.random::<f64>() < obs_fraction { 1.0 } else { 0.0 });
    if mask.sum() == 0.0 {
        let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
        mask[(i, j)] = 1.0;
    }
    let y = Arc::new(y);
    let mask = Arc::new(mask);
    let (yv, mv) = (y.clone(), mask.clone());
    let (yg, mg) = (y.clone(), mask.clone());
    let objective = SmoothObjective::new(
        move |x: &Matrix| (x - &*yv).component_mul(&mv).norm_squared(),
        2.0,
        set.diameter(),
    )?
    .with_gradient(move |x: &Matrix| (x - &*yg).component_mul(&mg) * 2.0);
    Ok(ProblemInstance {
        name: "matrix_completion",
        objective,
        set,
        reference: Reference { value: 0.0, provenance: Provenance::ClosedForm },
        start: Matrix::zeros(d, d),
        seed,
    })
}

/// `f(X) = ||X - Y||_F^2 / 2` over the nuclear ball where `Y` has the given
/// singular values on random orthonormal singular vectors. The optimum is
/// the singular-value soft threshold, so the reference is closed form.
pub fn make_planted_spectrum(d: usize, sigmas: &[f64], radius: f64, seed: u64) -> Result<ProblemInstance<Matrix>> {
    if sigmas.is_empty() || sigmas.len() > d || sigmas.iter().any(|s| !(*s >= 0.0)) {
        return invalid("need between 1 and d nonnegative singular values");
    }
    let set = ConstraintSet::nuclear_ball(d, d, radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = sigmas.len();
    let u = orthonormal_columns(d, r, &mut rng);
    let v = orthonormal_columns(d, r, &mut rng);
    let mut y = Matrix::zeros(d, d);
    for k in 0..r {
        y += u.column(k) * v.column(k).transpose() * sigmas[k];
    }
    let sv = Vector::from_vec(sigmas.to_vec());
    let proj = project_l1(&sv, radius);
    let value = 0.5 * (&sv - proj).norm_squared();
    let y = Arc::new(y);
    let (yv, yg) = (y.clone(), y.clone());
    let objective = SmoothObjective::new(move |x: &Matrix| 0.5 * (x - &*yv).norm_squared(), 1.0, set.diameter())?
        .with_gradient(move |x: &Matrix| x - &*yg);
    Ok(ProblemInstance {
        name: "planted_spectrum",
        objective,
        set,
        reference: Reference { value, provenance: Provenance::ClosedForm },
        start: Matrix::zeros(d, d),
        seed,
    })
}

/// Exact LMO by enumerating the vertices: `+-r e_i` for the l1 ball, `e_i`
/// for the simplex. Ties go to the first vertex in enumeration order
/// (`-r e_1, +r e_1, -r e_2, ...`).
pub fn brute_force_lmo_vector(set: &ConstraintSet, g: &Vector) -> Result<LmoResult<Vector>> {
    let d = set.dim();
    if g.len() != d {
        return Err(QfwError::DimensionMismatch { expected: d, got: g.len() });
    }
    let mut vertices: Vec<Vector> = Vec::new();
    match set {
        ConstraintSet::L1Ball { radius, .. } => {
            for i in 0..d {
                for sgn in [-1.0, 1.0] {
                    let mut e = Vector::zeros(d);
                    e[i] = sgn * radius;
                    vertices.push(e);
                }
            }
        }
        ConstraintSet::Simplex { .. } => {
            for i in 0..d {
                let mut e = Vector::zeros(d);
                e[i] = 1.0;
                vertices.push(e);
            }
        }
        ConstraintSet::LatentGroupBall { groups, p_norms, radius, .. }
            if groups.iter().zip(p_norms).all(|(g, &p)| g.len() == 1 || p == 1.0) =>
        {
            // Every group is an l1 ball: vertices are +-r e_i over covered coordinates.
            for (g, _) in groups.iter().zip(p_norms) {
                for &i in g {
                    for sgn in [-1.0, 1.0] {
                        let mut e = Vector::zeros(d);
                        e[i] = sgn * radius;
                        vertices.push(e);
                    }
                }
            }
        }
        other => return Err(QfwError::NotEnumerable(other.name().to_string())),
    }
    let mut best = 0;
    let mut best_val = vertices[0].dot(g);
    for (j, v) in vertices.iter().enumerate().skip(1) {
        let val = v.dot(g);
        if val < best_val {
            best = j;
            best_val = val;
        }
    }
    Ok(LmoResult { s: vertices.swap_remove(best), inner_value: best_val, additive_slack_bound: 0.0, charged_queries: 0 })
}

/// Sampled LMO over rank-one extreme points `-r u v^T` of a small nuclear
/// ball (`d <= 6`). Returns the best of `samples` random unit pairs; the
/// reported slack is the gap to the exact optimum `-r sigma1(g)`.
pub fn brute_force_lmo_matrix(set: &ConstraintSet, g: &Matrix, samples: usize, seed: u64) -> Result<LmoResult<Matrix>> {
    let ConstraintSet::NuclearBall { rows, cols, radius } = set else {
        return Err(QfwError::NotEnumerable(set.name().to_string()));
    };
    if (*rows).max(*cols) > 6 {
        return Err(QfwError::NotEnumerable(format!("nuclear ball of size {rows}x{cols}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Matrix)> = None;
    for _ in 0..samples.max(1) {
        let u = Vector::from_fn(*rows, |_, _| StandardNormal.sample(&mut rng)).normalize();
        let v = Vector::from_fn(*cols, |_, _| StandardNormal.sample(&mut rng)).normalize();
        let s = &u * v.transpose() * (-radius);
        let val = s.dot(g);
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, s));
        }
    }
    let (val, s) = best.expect("at least one sample");
    let (sv, _, _) = svd_sorted(g);
    Ok(LmoResult { s, inner_value: val, additive_slack_bound: val + radius * sv[0], charged_queries: 0 })
}

/// Dual exponent re-exported for problem definitions.
pub fn conjugate_exponent(p: f64) -> f64 {
    dual_exponent(p)
}
