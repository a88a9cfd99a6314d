//! Built-in invariant suite behind `qfw verify`. Every check is
//! deterministic (fixed seeds) and sized to finish in seconds.

use std::fmt::Write as _;
use std::time::Instant;

use qfw_core::cost_model::{predict_vector, CostParams, VectorCostVariant};
use qfw_core::fw_engine::{
    exact_fw_run, matrix_power_run, qfw_group_run, qfw_jordan_run, qfw_matrix_qpm_run,
    qfw_vector_run, RunOptions, RunTrace,
};
use qfw_core::lmo_matrix::{accumulation_bound, additive_error_chain, qtsve_emulate, singular_values};
use qfw_core::lmo_vector::{duerr_hoyer_max_find, qlmo_group};
use qfw_core::oracles::{bounded_error_inject, fd_gradient};
use qfw_core::problems::{
    brute_force_lmo_vector, make_group_instance, make_l1_quadratic, make_least_squares_l1, make_planted_spectrum,
    make_simplex_quadratic,
};
use qfw_core::{ConstraintSet, ErrorModel, Matrix, NoiseMode, QueryLedger, SmoothObjective, Vector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::Config;
use crate::run::{execute, trace_csv};

/// Rounding allowance for inequalities that are exact in real arithmetic.
const ROUND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
}

impl Outcome {
    fn le(measured: f64, bound: f64) -> Self {
        Self { passed: measured <= bound, measured, bound }
    }

    fn flag(ok: bool) -> Self {
        Self { passed: ok, measured: if ok { 0.0 } else { 1.0 }, bound: 0.0 }
    }
}

type CheckFn = fn(f64) -> Outcome;

struct Check {
    suite: &'static str,
    name: &'static str,
    run: CheckFn,
}

const CHECKS: &[Check] = &[
    Check { suite: "vector", name: "convergence_bound_exact_lmo", run: convergence_bound_exact },
    Check { suite: "vector", name: "maxfind_slack_within_allowance", run: maxfind_slack_allowance },
    Check { suite: "vector", name: "jordan_slack_within_allowance", run: jordan_slack_allowance },
    Check { suite: "vector", name: "feasible_iterates", run: feasible_iterates },
    Check { suite: "vector", name: "group_atoms_feasible", run: group_atoms_feasible },
    Check { suite: "vector", name: "best_gap_nonincreasing", run: best_gap_nonincreasing },
    Check { suite: "vector", name: "duality_gap_bounds_primal_gap", run: gap_bounds_primal },
    Check { suite: "vector", name: "exact_lmo_matches_enumeration", run: lmo_matches_enumeration },
    Check { suite: "vector", name: "jordan_one_query_per_round", run: jordan_one_query },
    Check { suite: "vector", name: "group_singleton_reduction", run: group_singleton_reduction },
    Check { suite: "vector", name: "group_two_group_convergence", run: group_two_group },
    Check { suite: "bounds", name: "finite_difference_error", run: fd_error },
    Check { suite: "bounds", name: "maxfind_two_eps_slack", run: maxfind_two_eps },
    Check { suite: "bounds", name: "bilinear_perturbation", run: bilinear },
    Check { suite: "matrix", name: "power_chain_accumulation", run: chain_accumulation },
    Check { suite: "matrix", name: "qtsve_consistent_repeat", run: qtsve_repeat },
    Check { suite: "matrix", name: "unit_singular_vectors", run: unit_vectors },
    Check { suite: "matrix", name: "qpm_zero_noise_equals_power", run: qpm_zero_noise },
    Check { suite: "determinism", name: "trace_bytes_repeat", run: trace_bytes },
    Check { suite: "ledger", name: "ledger_consistent_and_monotone", run: ledger_monotone },
    Check { suite: "cost", name: "prediction_pure", run: prediction_pure },
];

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub filter: Option<String>,
    pub sigma_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { filter: None, sigma_scale: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub suite: &'static str,
    pub name: &'static str,
    pub outcome: Outcome,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.outcome.passed).count()
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<44} {:<6} {:>14} {:>14} {:>8}\n", "invariant", "status", "measured", "bound", "secs");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<44} {:<6} {:>14.6e} {:>14.6e} {:>8.2}",
                format!("{}/{}", r.suite, r.name),
                if r.outcome.passed { "pass" } else { "FAIL" },
                r.outcome.measured,
                r.outcome.bound,
                r.seconds
            );
        }
        out
    }
}

/// Names of all checks as `suite/name`.
pub fn check_names() -> Vec<String> {
    CHECKS.iter().map(|c| format!("{}/{}", c.suite, c.name)).collect()
}

pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let rows = CHECKS
        .iter()
        .filter(|c| match &opts.filter {
            Some(f) => c.suite.contains(f.as_str()) || c.name.contains(f.as_str()),
            None => true,
        })
        .map(|c| {
            let start = Instant::now();
            let outcome = (c.run)(opts.sigma_scale);
            VerifyRow { suite: c.suite, name: c.name, outcome, seconds: start.elapsed().as_secs_f64() }
        })
        .collect();
    VerifyReport { rows }
}

fn opts(sigma_scale: f64) -> RunOptions {
    RunOptions { sigma_scale, ..Default::default() }
}

fn worst_h_ratio<X>(trace: &RunTrace<X>, f_star: f64) -> f64 {
    trace.rows.iter().map(|r| (r.f_value - f_star) / r.h_bound).fold(f64::NEG_INFINITY, f64::max)
}

fn convergence_bound_exact(_: f64) -> Outcome {
    let inst = make_least_squares_l1(100, 50, 3, 0.0, 1.0, 1).expect("valid instance");
    let trace = exact_fw_run(&inst.objective, &inst.set, inst.start.clone(), 1000).expect("exact run");
    Outcome::le(worst_h_ratio(&trace, inst.reference.value), 1.0)
}

fn slack_ratio<X>(trace: &RunTrace<X>) -> f64 {
    trace.details.iter().map(|d| d.slack_bound / d.slack_allowance).fold(0.0, f64::max)
}

fn maxfind_slack_allowance(scale: f64) -> Outcome {
    let inst = make_l1_quadratic(64, 1.0, 2).expect("valid instance");
    let model = ErrorModel::new(NoiseMode::WorstCase, 2);
    let tr = qfw_vector_run(&inst.objective, &inst.set, 0.2, 0.05, &model, inst.start.clone(), &opts(scale))
        .expect("run");
    let ratio = slack_ratio(&tr);
    let h = worst_h_ratio(&tr, 0.0);
    Outcome { passed: ratio <= 1.0 + ROUND && h <= 1.0, measured: ratio.max(h), bound: 1.0 }
}

fn jordan_slack_allowance(scale: f64) -> Outcome {
    let inst = make_l1_quadratic(32, 1.0, 3).expect("valid instance");
    let model = ErrorModel::new(NoiseMode::WorstCase, 3);
    let tr = qfw_jordan_run(&inst.objective, &inst.set, 0.2, 0.05, &model, inst.start.clone(), &opts(scale))
        .expect("run");
    let ratio = slack_ratio(&tr);
    Outcome::le(ratio, 1.0 + ROUND)
}

fn feasible_iterates(scale: f64) -> Outcome {
    let l1 = make_least_squares_l1(16, 10, 2, 0.05, 1.0, 4).expect("valid instance");
    let sx = make_simplex_quadratic(16, 4).expect("valid instance");
    // Disjoint groups: membership is exact there. Overlapping groups are
    // covered atom by atom in `group_atoms_feasible`.
    let gp = make_group_instance(6, vec![vec![0, 1, 2], vec![3, 4, 5]], vec![2.0, 3.0], 1.0, 2.0, 4)
        .expect("valid instance");
    let model = ErrorModel::new(NoiseMode::Uniform, 4);
    let mut ok = true;
    for t in 1..=20 {
        let o = RunOptions { iterations: Some(t), ..opts(scale) };
        for inst in [&l1, &sx] {
            let a = qfw_vector_run(&inst.objective, &inst.set, 0.1, 0.05, &model, inst.start.clone(), &o).unwrap();
            let b = qfw_jordan_run(&inst.objective, &inst.set, 0.1, 0.05, &model, inst.start.clone(), &o).unwrap();
            ok &= inst.set.contains_vector(&a.final_iterate).unwrap();
            ok &= inst.set.contains_vector(&b.final_iterate).unwrap();
        }
        let c = qfw_group_run(&gp.objective, &gp.set, 0.1, 0.05, &model, gp.start.clone(), &o).unwrap();
        ok &= gp.set.contains_vector(&c.final_iterate).unwrap();
    }
    Outcome::flag(ok)
}

/// Every atom of the overlapping-group oracle is supported on one group
/// with group norm at most the radius, so convex combinations stay inside.
fn group_atoms_feasible(_: f64) -> Outcome {
    let groups = vec![vec![0, 1, 2], vec![2, 3, 4, 5], vec![5, 0]];
    let p_norms = vec![2.0, 3.0, f64::INFINITY];
    let radius = 1.5;
    let inst = make_group_instance(6, groups.clone(), p_norms.clone(), radius, 2.0, 20).expect("valid instance");
    let mut rng = ErrorModel::new(NoiseMode::Uniform, 20).rng(0);
    let mut worst: f64 = 0.0;
    for trial in 0..200u64 {
        let x = Vector::from_fn(6, |_, _| rng.random_range(-0.3..0.3));
        let model = ErrorModel::new(NoiseMode::Uniform, trial);
        let r = qlmo_group(&inst.objective, &x, 1e-4, 0.01, &groups, &p_norms, radius, &model, &mut QueryLedger::new())
            .unwrap();
        let owner = groups.iter().position(|g| (0..6).all(|i| r.s[i] == 0.0 || g.contains(&i)));
        match owner {
            Some(gi) => {
                let norm = lp_norm(groups[gi].iter().map(|&i| r.s[i]), p_norms[gi]);
                worst = worst.max(norm / radius - 1.0);
            }
            None => worst = f64::INFINITY,
        }
    }
    Outcome::le(worst, ROUND)
}

fn lp_norm(vals: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        vals.fold(0.0, |m, v| m.max(v.abs()))
    } else {
        vals.map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn best_gap_nonincreasing(scale: f64) -> Outcome {
    let inst = make_least_squares_l1(40, 30, 3, 0.1, 1.0, 5).expect("valid instance");
    let model = ErrorModel::new(NoiseMode::Uniform, 5);
    let tr = qfw_vector_run(&inst.objective, &inst.set, 0.1, 0.05, &model, inst.start.clone(), &opts(scale))
        .expect("run");
    let ok = tr.rows.windows(2).all(|w| w[1].best_gap <= w[0].best_gap)
        && tr.rows.iter().all(|r| r.best_gap <= r.duality_gap);
    Outcome::flag(ok)
}

fn gap_bounds_primal(_: f64) -> Outcome {
    let inst = make_l1_quadratic(30, 1.0, 6).expect("valid instance");
    let tr = exact_fw_run(&inst.objective, &inst.set, inst.start.clone(), 300).expect("run");
    let worst = tr.rows.iter().map(|r| r.f_value - r.duality_gap).fold(f64::NEG_INFINITY, f64::max);
    Outcome::le(worst, ROUND)
}

fn lmo_matches_enumeration(_: f64) -> Outcome {
    let mut rng = ErrorModel::new(NoiseMode::Uniform, 7).rng(0);
    let mut bad = 0usize;
    for trial in 0..400 {
        let d = rng.random_range(1..24);
        let g = Vector::from_fn(d, |_, _| {
            // Integer grid values make ties common.
            (rng.random_range(-3i32..=3)) as f64
        });
        let set = if trial % 2 == 0 {
            ConstraintSet::l1_ball(d, rng.random_range(0.5..2.0)).unwrap()
        } else {
            ConstraintSet::simplex(d).unwrap()
        };
        let exact = set.exact_lmo_vector(&g).unwrap();
        let brute = brute_force_lmo_vector(&set, &g).unwrap();
        if (exact.dot(&g) - brute.inner_value).abs() > ROUND {
            bad += 1;
        }
    }
    Outcome::le(bad as f64, 0.0)
}

fn jordan_one_query(_: f64) -> Outcome {
    let mut worst: f64 = 0.0;
    for d in [10, 100, 1000] {
        let inst = make_l1_quadratic(d, 1.0, 8).expect("valid instance");
        let model = ErrorModel::new(NoiseMode::Uniform, 8);
        let o = RunOptions { iterations: Some(5), ..Default::default() };
        let tr = qfw_jordan_run(&inst.objective, &inst.set, 0.1, 0.05, &model, inst.start.clone(), &o).unwrap();
        for r in tr.ledger.rounds() {
            worst = worst.max((r.quantum_queries as f64 - 1.0).abs() + r.function_queries as f64);
        }
    }
    Outcome::le(worst, 0.0)
}

fn group_singleton_reduction(scale: f64) -> Outcome {
    let d = 12;
    let inst = make_l1_quadratic(d, 1.0, 9).expect("valid instance");
    let groups: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
    let gset = ConstraintSet::latent_group_ball(d, groups, vec![1.0; d], 1.0).unwrap();
    let model = ErrorModel::new(NoiseMode::Uniform, 9);
    let a = qfw_vector_run(&inst.objective, &inst.set, 0.1, 0.05, &model, inst.start.clone(), &opts(scale)).unwrap();
    let b = qfw_group_run(&inst.objective, &gset, 0.1, 0.05, &model, inst.start.clone(), &opts(scale)).unwrap();
    let same = a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(x, y)| x.f_value.to_bits() == y.f_value.to_bits())
        && a.final_iterate == b.final_iterate;
    Outcome::flag(same)
}

fn group_two_group(scale: f64) -> Outcome {
    let inst = make_group_instance(6, vec![vec![0, 1, 2], vec![3, 4, 5]], vec![2.0, 2.0], 1.0, 2.0, 10)
        .expect("valid instance");
    let model = ErrorModel::new(NoiseMode::Uniform, 10);
    let eps = 0.1;
    let tr = qfw_group_run(&inst.objective, &inst.set, eps, 0.05, &model, inst.start.clone(), &opts(scale)).unwrap();
    Outcome::le(tr.final_value() - inst.reference.value, inst.reference.tolerance(eps))
}

/// Random convex quadratic `x^T Q x / 2 + b^T x` with its exact smoothness.
pub fn random_quadratic(d: usize, rng: &mut impl Rng) -> (SmoothObjective<Vector>, Matrix, Vector) {
    let a = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let q = a.transpose() * &a / d as f64;
    let b = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
    let l = singular_values(&q)[0];
    let (qv, bv) = (q.clone(), b.clone());
    let f = SmoothObjective::new(move |x: &Vector| 0.5 * x.dot(&(&qv * x)) + bv.dot(x), l, 2.0).unwrap();
    (f, q, b)
}

fn fd_error(_: f64) -> Outcome {
    let mut rng = ErrorModel::new(NoiseMode::Uniform, 11).rng(0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=20);
        let (f, q, b) = random_quadratic(d, &mut rng);
        let x = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let sigma = 10f64.powf(rng.random_range(-4.0..0.0));
        let est = fd_gradient(&f, &x, sigma, &mut QueryLedger::new()).unwrap();
        let truth = &q * &x + &b;
        let bound = (d as f64).sqrt() * f.smoothness * sigma / 2.0;
        worst = worst.max((est.g - truth).norm() / (bound * (1.0 + 1e-9) + 1e-12));
    }
    Outcome::le(worst, 1.0)
}

fn maxfind_two_eps(_: f64) -> Outcome {
    let mut rng = ErrorModel::new(NoiseMode::Uniform, 12).rng(0);
    let mut worst: f64 = f64::NEG_INFINITY;
    for trial in 0..1000 {
        let d = rng.random_range(2..=128);
        let eps = 10f64.powf(rng.random_range(-3.0..0.0));
        // Near-ties: everything within 3 eps of the top, so the injected
        // error can reorder the candidates.
        let top = rng.random_range(0..d);
        let truth: Vec<f64> =
            (0..d).map(|i| if i == top { 1.0 } else { 1.0 - 3.0 * eps * rng.random::<f64>() }).collect();
        let model = ErrorModel::new(NoiseMode::WorstCase, trial);
        let noisy = bounded_error_inject(&Vector::from_vec(truth.clone()), eps, &model);
        let found = duerr_hoyer_max_find(noisy.as_slice(), 1e-6, &model).unwrap();
        let max = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max((max - truth[found.index]) / (2.0 * eps));
    }
    Outcome::le(worst, 1.0 + ROUND)
}

fn unit(d: usize, rng: &mut impl Rng) -> Vector {
    loop {
        let v = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

/// Unit vector at chord distance exactly `dist` from unit `u`.
pub fn rotate_by_chord(u: &Vector, dist: f64, rng: &mut impl Rng) -> Vector {
    if u.len() < 2 {
        return u.clone();
    }
    let w = loop {
        let g = unit(u.len(), rng);
        let t = &g - u * u.dot(&g);
        let n = t.norm();
        if n > 1e-9 {
            break t / n;
        }
    };
    let theta = 2.0 * (dist / 2.0).asin();
    let out = u * theta.cos() + w * theta.sin();
    let n = out.norm();
    out / n
}

fn bilinear(_: f64) -> Outcome {
    let mut rng = ErrorModel::new(NoiseMode::Uniform, 13).rng(0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (r, c) = (rng.random_range(1..=12), rng.random_range(1..=12));
        let m = Matrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
        let delta = rng.random_range(0.0..1.0);
        let (u, v) = (unit(r, &mut rng), unit(c, &mut rng));
        let u2 = rotate_by_chord(&u, delta * rng.random::<f64>(), &mut rng);
        let v2 = rotate_by_chord(&v, delta * rng.random::<f64>(), &mut rng);
        let lhs = (u.dot(&(&m * &v)) - u2.dot(&(&m * &v2))).abs();
        let bound = 2.0 * singular_values(&m)[0] * delta;
        worst = worst.max(lhs - bound * (1.0 + ROUND) - 1e-14);
    }
    Outcome::le(worst, 0.0)
}

fn chain_accumulation(_: f64) -> Outcome {
    let mut rng = ErrorModel::new(NoiseMode::Uniform, 14).rng(0);
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let d = rng.random_range(2..=20);
        let a = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let m = a.transpose() * &a;
        let target = rng.random_range(0.3..0.99);
        let m = &m * (target / singular_values(&m)[0]);
        let smax = singular_values(&m)[0];
        let steps = rng.random_range(1..=40);
        let eps_step = 10f64.powf(rng.random_range(-6.0..-1.0));
        let mode = [NoiseMode::WorstCase, NoiseMode::Uniform, NoiseMode::Consistent][seed as usize % 3];
        let z0 = unit(d, &mut rng);
        let (clean, noisy) = additive_error_chain(&m, &z0, steps, eps_step, &ErrorModel::new(mode, seed));
        let bound = accumulation_bound(smax, steps, eps_step);
        worst = worst.max((noisy - clean).norm() / (bound * (1.0 + 1e-9)));
    }
    Outcome::le(worst, 1.0)
}

fn qtsve_repeat(_: f64) -> Outcome {
    let mut rng = ErrorModel::new(NoiseMode::Uniform, 15).rng(0);
    let mut ok = true;
    for seed in 0..20u64 {
        let m = Matrix::from_fn(8, 8, |_, _| StandardNormal.sample(&mut rng));
        let sv = singular_values(&m);
        let eps = (sv[0] - sv[1]) / 4.0;
        let model = ErrorModel::new(NoiseMode::Consistent, seed);
        let a = qtsve_emulate(&m, eps, 0.1, &model).unwrap();
        let b = qtsve_emulate(&m, eps, 0.1, &model).unwrap();
        ok &= a.sigma_hat.to_bits() == b.sigma_hat.to_bits() && a.u == b.u && a.v == b.v;
    }
    Outcome::flag(ok)
}

fn unit_vectors(_: f64) -> Outcome {
    let mut rng = ErrorModel::new(NoiseMode::Uniform, 16).rng(0);
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let m = Matrix::from_fn(10, 10, |_, _| StandardNormal.sample(&mut rng));
        let sv = singular_values(&m);
        let model = ErrorModel::new(NoiseMode::Uniform, seed);
        let t = qtsve_emulate(&m, (sv[0] - sv[1]) / 4.0, 0.2, &model).unwrap();
        let q = qfw_core::lmo_matrix::qpm_emulate(&m, 30, 0.05, 0.05, Default::default(), &model).unwrap().triple;
        for tr in [t, q] {
            worst = worst.max((tr.u.norm() - 1.0).abs()).max((tr.v.norm() - 1.0).abs());
            let s = &tr.u * tr.v.transpose();
            worst = worst.max(singular_values(&s).iter().sum::<f64>() - 1.0);
        }
    }
    Outcome::le(worst, ROUND)
}

fn qpm_zero_noise(_: f64) -> Outcome {
    let inst = make_planted_spectrum(8, &[0.9, 0.3], 0.5, 17).expect("valid instance");
    let o = RunOptions { iterations: Some(30), ..Default::default() };
    let z = ErrorModel::new(NoiseMode::Zero, 17);
    let a = qfw_matrix_qpm_run(&inst.objective, &inst.set, 0.1, &z, inst.start.clone(), &o).unwrap();
    let b = matrix_power_run(&inst.objective, &inst.set, 0.1, &z, inst.start.clone(), &o).unwrap();
    let same = a.rows.iter().zip(&b.rows).all(|(x, y)| x.f_value.to_bits() == y.f_value.to_bits())
        && a.final_iterate == b.final_iterate;
    Outcome::flag(same)
}

const DETERMINISM_CONFIGS: [&str; 2] = [
    r#"
[run]
variant = "qfw_maxfind"
epsilon = 0.1
seed = 18
error_model = "uniform"

[problem]
kind = "least_squares_l1"
d = 30
n_rows = 20
noise = 0.05
"#,
    r#"
[run]
variant = "qfw_qtsve"
epsilon = 0.1
seed = 18
error_model = "consistent"
iterations = 25

[problem]
kind = "matrix_completion"
d = 10
rank = 2
obs_fraction = 0.5
"#,
];

fn trace_bytes(_: f64) -> Outcome {
    let mut ok = true;
    for text in DETERMINISM_CONFIGS {
        let cfg = Config::parse(text).expect("built-in config");
        let a = trace_csv(&execute(&cfg, 1.0).expect("run").rows);
        let b = trace_csv(&execute(&cfg, 1.0).expect("run").rows);
        ok &= a == b;
    }
    Outcome::flag(ok)
}

fn ledger_monotone(scale: f64) -> Outcome {
    let inst = make_least_squares_l1(20, 15, 2, 0.0, 1.0, 19).expect("valid instance");
    let model = ErrorModel::new(NoiseMode::Uniform, 19);
    let o = RunOptions { iterations: Some(50), ..opts(scale) };
    let tr = qfw_vector_run(&inst.objective, &inst.set, 0.1, 0.05, &model, inst.start.clone(), &o).unwrap();
    let mono = tr.rows.windows(2).all(|w| {
        let (a, b) = (&w[0].cumulative, &w[1].cumulative);
        b.function_queries >= a.function_queries
            && b.quantum_queries >= a.quantum_queries
            && b.time_cost >= a.time_cost
            && b.gradient_evals >= a.gradient_evals
    });
    Outcome::flag(mono && tr.ledger.is_consistent() && tr.ledger.rounds().len() == tr.rows.len())
}

fn prediction_pure(_: f64) -> Outcome {
    let p = CostParams {
        d: Some(100.0),
        curvature: Some(1.0),
        eps: Some(0.1),
        p_fail: Some(0.01),
        ..Default::default()
    };
    let a = predict_vector(VectorCostVariant::QfwMaxfind, &p).unwrap();
    let b = predict_vector(VectorCostVariant::QfwMaxfind, &p).unwrap();
    let j = predict_vector(VectorCostVariant::QfwJordan, &p).unwrap();
    Outcome::flag(a == b && j.per_round_cost == 1.0)
}
