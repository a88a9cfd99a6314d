//! The Frank-Wolfe loop and its wirings to the exact, classical and
//! emulated-quantum linear minimization oracles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{ConstraintSet, Costs, ErrorModel, FwPoint, Matrix, QueryLedger, SmoothObjective, Vector};
use crate::error::{invalid, QfwError, Result};
use crate::lmo_matrix::{self, StartVector, DEFAULT_C0};
use crate::lmo_vector::{self, group_size_factor};
use crate::oracles::{self, Guarantee};

/// Step size of round `k` (0-based): `2 / (k + 2)`.
pub fn gamma(k: usize) -> f64 {
    2.0 / (k as f64 + 2.0)
}

/// Rounds needed for precision `eps`: `ceil(4 C_f / eps) - 2`, at least 1.
pub fn iteration_count(curvature: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) || !eps.is_finite() {
        return invalid(format!("precision must be finite and > 0, got {eps}"));
    }
    let raw = (4.0 * curvature / eps).ceil() - 2.0;
    if !raw.is_finite() || raw > 1e9 {
        return invalid(format!("iteration count {raw} is out of range"));
    }
    Ok(if raw < 1.0 { 1 } else { raw as usize })
}

/// Primal gap bound after `t` rounds: `4 C_f / (t + 2)`.
pub fn h_bound(curvature: f64, t: usize) -> f64 {
    4.0 * curvature / (t as f64 + 2.0)
}

/// Per-round parameters of every wiring, as functions of the round index.
///
/// Every schedule is chosen so the oracle's additive slack in round `k`
/// equals `C_f / (k + 2)`, half of `gamma_k C_f`, which yields the
/// `4 C_f / (t + 2)` primal gap bound. Radii other than 1 enter as a
/// divisor so that the slack identity holds for any radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub curvature: f64,
    pub smoothness: f64,
    pub dim: usize,
    pub radius: f64,
}

impl Schedule {
    pub fn new(objective_curvature: f64, smoothness: f64, set: &ConstraintSet) -> Self {
        let dim = match set {
            ConstraintSet::NuclearBall { rows, cols, .. } => (*rows).max(*cols),
            _ => set.dim(),
        };
        Self { curvature: objective_curvature, smoothness, dim, radius: set.radius() }
    }

    pub fn gamma(&self, k: usize) -> f64 {
        gamma(k)
    }

    /// Slack the gap bound tolerates in round `k`: `gamma_k C_f / 2`.
    pub fn slack_allowance(&self, k: usize) -> f64 {
        self.curvature / (k as f64 + 2.0)
    }

    fn positive_step(&self, raw: f64) -> f64 {
        if raw > 0.0 && raw.is_finite() {
            raw
        } else if self.smoothness == 0.0 {
            // Finite differences are exact on affine functions.
            1.0
        } else {
            f64::EPSILON.sqrt()
        }
    }

    /// Finite-difference step: `C_f / (sqrt(d) L (k + 2) r)`.
    pub fn fd_step(&self, k: usize) -> f64 {
        let d = self.dim as f64;
        self.positive_step(self.curvature / (d.sqrt() * self.smoothness * (k as f64 + 2.0) * self.radius))
    }

    /// Group finite-difference step: `C_f / (sqrt(d) L (k + 2) max_i |g_i|^{1/p_i} r)`.
    pub fn group_fd_step(&self, k: usize, size_factor: f64) -> f64 {
        self.positive_step(self.fd_step(k) / size_factor)
    }

    /// Jordan grid radius: `rho C_f / (16 pi d^2 (d/rho + 1) L (k + 2) r)`.
    pub fn jordan_radius(&self, k: usize, rho: f64) -> f64 {
        let d = self.dim as f64;
        self.positive_step(
            rho * self.curvature
                / (16.0 * std::f64::consts::PI * d * d * (d / rho + 1.0) * self.smoothness
                    * (k as f64 + 2.0)
                    * self.radius),
        )
    }

    /// QTSVE vector precision: `C_f / (2 r (k + 2) sigma1)`.
    pub fn qtsve_delta(&self, k: usize, sigma1: f64) -> f64 {
        self.curvature / (2.0 * self.radius * (k as f64 + 2.0) * sigma1)
    }

    /// QPM chain length: `ceil(2 C0 sigma1 ln d / eps)`, at least 1.
    pub fn qpm_iterations(&self, c0: f64, sigma1: f64, eps: f64) -> usize {
        lmo_matrix::power_iteration_count(2.0 * c0, sigma1, self.dim, eps)
    }

    /// QPM chain and tomography precision: `eps gamma'_min / (16 sigma1)`.
    pub fn qpm_delta(&self, eps: f64, gamma_min: f64, sigma1: f64) -> f64 {
        eps * gamma_min / (16.0 * sigma1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Exact gradient, exact LMO. Reference solver.
    ExactFw,
    /// Classical finite-difference gradient (d + 1 queries), exact LMO.
    ClassicalFw,
    /// Finite differences behind emulated maximum finding.
    QfwMaxfind,
    /// Emulated one-query Jordan gradient, classical scan.
    QfwJordan,
    /// Latent group norm with emulated maximum finding over groups.
    QfwGroup,
    /// Nuclear ball with emulated QTSVE.
    QfwQtsve,
    /// Nuclear ball with the emulated quantum power method.
    QfwQpm,
    /// Nuclear ball with the classical power method on the QPM schedule.
    ClassicalPower,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::ExactFw,
        Variant::ClassicalFw,
        Variant::QfwMaxfind,
        Variant::QfwJordan,
        Variant::QfwGroup,
        Variant::QfwQtsve,
        Variant::QfwQpm,
        Variant::ClassicalPower,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::ExactFw => "exact_fw",
            Variant::ClassicalFw => "classical_fw",
            Variant::QfwMaxfind => "qfw_maxfind",
            Variant::QfwJordan => "qfw_jordan",
            Variant::QfwGroup => "qfw_group",
            Variant::QfwQtsve => "qfw_qtsve",
            Variant::QfwQpm => "qfw_qpm",
            Variant::ClassicalPower => "classical_power",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, Variant::QfwQtsve | Variant::QfwQpm | Variant::ClassicalPower)
    }

    /// Whether the variant can run on matrices (`Some(true)`), vectors
    /// (`Some(false)`) or both (`None`).
    pub fn domain(&self) -> Option<bool> {
        match self {
            Variant::ExactFw => None,
            v => Some(v.is_matrix()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    /// Step size of the round that produced `x_t`.
    pub gamma: f64,
    pub f_value: f64,
    pub duality_gap: f64,
    /// Smallest duality gap seen so far.
    pub best_gap: f64,
    pub h_bound: f64,
    /// Additive slack bound the oracle reported for the round that produced `x_t`.
    pub slack_bound: f64,
    pub cumulative: Costs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundDetail {
    pub slack_bound: f64,
    pub slack_allowance: f64,
    /// The emulated subroutine drew its failure branch this round.
    pub failed: bool,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct RunTrace<X> {
    pub variant: String,
    pub rows: Vec<TraceRow>,
    pub details: Vec<RoundDetail>,
    pub final_iterate: X,
    pub ledger: QueryLedger,
    pub curvature_bound: f64,
}

impl<X> RunTrace<X> {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn final_value(&self) -> f64 {
        self.rows.last().map(|r| r.f_value).unwrap_or(f64::NAN)
    }

    pub fn final_gap(&self) -> f64 {
        self.rows.last().map(|r| r.duality_gap).unwrap_or(f64::NAN)
    }

    /// Whether every round's reported slack stayed within the allowance
    /// that the `4 C_f / (t + 2)` bound needs.
    pub fn slack_within_allowance(&self) -> bool {
        self.details.iter().all(|d| d.slack_bound <= d.slack_allowance * (1.0 + 1e-12))
    }

    pub fn any_failure(&self) -> bool {
        self.details.iter().any(|d| d.failed)
    }

    /// Mean per-round charge of the given cost component.
    pub fn mean_round_cost(&self, pick: impl Fn(&Costs) -> f64) -> f64 {
        let rounds = self.ledger.rounds();
        if rounds.is_empty() {
            return f64::NAN;
        }
        rounds.iter().map(&pick).sum::<f64>() / rounds.len() as f64
    }
}

/// What the oracle sees in one round.
pub struct RoundInput<'a, X> {
    pub k: usize,
    pub x: &'a X,
    /// Exact gradient at `x` when the objective provides one.
    pub grad: Option<&'a X>,
    /// Error model for this round, derived from the run's model.
    pub model: ErrorModel,
}

pub struct LmoStep<X> {
    pub s: X,
    pub slack_bound: f64,
    pub failed: bool,
    pub params: Vec<(&'static str, f64)>,
}

impl<X> LmoStep<X> {
    fn exact(s: X) -> Self {
        Self { s, slack_bound: 0.0, failed: false, params: Vec::new() }
    }
}

/// `max_{s in set} <x - s, grad>`.
pub fn duality_gap<X: FwPoint>(x: &X, grad: &X, set: &ConstraintSet) -> Result<f64> {
    let s = X::exact_lmo(set, grad)?;
    Ok(x.inner(grad) - s.inner(grad))
}

/// Generic Frank-Wolfe loop: `iterations` rounds of
/// `x <- (1 - gamma_k) x + gamma_k s_k` from `start`.
///
/// Row `t` of the trace describes `x_t`, the iterate after `t` rounds.
/// Objective values and duality gaps in the trace are bookkeeping and are
/// not charged to the ledger.
pub fn fw_run<X: FwPoint>(
    objective: &SmoothObjective<X>,
    set: &ConstraintSet,
    lmo: &mut dyn FnMut(RoundInput<'_, X>, &mut QueryLedger) -> Result<LmoStep<X>>,
    start: X,
    iterations: usize,
    model: &ErrorModel,
    variant: &str,
) -> Result<RunTrace<X>> {
    if !set.contains(&start)? {
        return Err(QfwError::InfeasibleStart);
    }
    if iterations == 0 {
        return invalid("a run needs at least one round");
    }
    let cf = objective.curvature_bound;
    let mut ledger = QueryLedger::new();
    let mut rows = Vec::with_capacity(iterations);
    let mut details = Vec::with_capacity(iterations);
    let mut x = start;
    let mut grad = objective.gradient(&x).ok();
    let mut best_gap = f64::INFINITY;
    for k in 0..iterations {
        let step = lmo(RoundInput { k, x: &x, grad: grad.as_ref(), model: model.derive(k as u64) }, &mut ledger)?;
        if !step.s.all_finite() {
            return invalid(format!("oracle returned a non-finite atom in round {k}"));
        }
        let g = gamma(k);
        x = x.convex_step(&step.s, g);
        ledger.close_round();
        grad = objective.gradient(&x).ok();
        let gap = match &grad {
            Some(gr) => duality_gap(&x, gr, set)?,
            None => f64::NAN,
        };
        if gap < best_gap {
            best_gap = gap;
        }
        let t = k + 1;
        rows.push(TraceRow {
            t,
            gamma: g,
            f_value: objective.value_uncharged(&x),
            duality_gap: gap,
            best_gap,
            h_bound: h_bound(cf, t),
            slack_bound: step.slack_bound,
            cumulative: ledger.totals(),
        });
        details.push(RoundDetail {
            slack_bound: step.slack_bound,
            slack_allowance: gamma(k) * cf / 2.0,
            failed: step.failed,
            params: step.params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        });
    }
    Ok(RunTrace { variant: variant.to_string(), rows, details, final_iterate: x, ledger, curvature_bound: cf })
}

/// Knobs shared by the wired runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Multiplier on the finite-difference step schedule. 1 is the proven
    /// schedule; anything larger loosens the oracle slack.
    pub sigma_scale: f64,
    /// Power-method constant `C0`.
    pub c0: f64,
    pub start_vector: StartVector,
    /// Overrides the round count derived from the precision.
    pub iterations: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { sigma_scale: 1.0, c0: DEFAULT_C0, start_vector: StartVector::Ones, iterations: None }
    }
}

fn check_p_fail(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("failure probability must be in (0, 1), got {p}"));
    }
    Ok(())
}

fn rounds_for(objective_cf: f64, eps: f64, opts: &RunOptions) -> Result<usize> {
    match opts.iterations {
        Some(0) => invalid("iteration override must be >= 1"),
        Some(t) => Ok(t),
        None => iteration_count(objective_cf, eps),
    }
}

/// Exact gradient and exact LMO for `iterations` rounds.
pub fn exact_fw_run<X: FwPoint>(
    objective: &SmoothObjective<X>,
    set: &ConstraintSet,
    start: X,
    iterations: usize,
) -> Result<RunTrace<X>> {
    let mut lmo = |inp: RoundInput<'_, X>, _: &mut QueryLedger| -> Result<LmoStep<X>> {
        let g = inp.grad.ok_or(QfwError::MissingGradient)?;
        Ok(LmoStep::exact(X::exact_lmo(set, g)?))
    };
    fw_run(objective, set, &mut lmo, start, iterations, &ErrorModel::zero(), Variant::ExactFw.name())
}

/// Classical baseline: full forward-difference gradient (d + 1 queries)
/// on the fd step schedule, then the exact LMO.
pub fn classical_fw_run(
    objective: &SmoothObjective<Vector>,
    set: &ConstraintSet,
    eps: f64,
    start: Vector,
    opts: &RunOptions,
) -> Result<RunTrace<Vector>> {
    let t = rounds_for(objective.curvature_bound, eps, opts)?;
    let sched = Schedule::new(objective.curvature_bound, objective.smoothness, set);
    let diameter = set.diameter();
    let mut lmo = |inp: RoundInput<'_, Vector>, ledger: &mut QueryLedger| -> Result<LmoStep<Vector>> {
        let sigma = sched.fd_step(inp.k) * opts.sigma_scale;
        let est = oracles::fd_gradient(objective, inp.x, sigma, ledger)?;
        let Guarantee::L2 { bound } = est.guarantee else { unreachable!() };
        Ok(LmoStep {
            s: set.exact_lmo_vector(&est.g)?,
            slack_bound: diameter * bound,
            failed: false,
            params: vec![("sigma", sigma)],
        })
    };
    fw_run(objective, set, &mut lmo, start, t, &ErrorModel::zero(), Variant::ClassicalFw.name())
}

/// Finite differences behind the emulated value oracle, maximum finding
/// over the components (magnitudes on the l1 ball, negated values on the
/// simplex). Each round gets failure budget `p_fail / T`.
pub fn qfw_vector_run(
    objective: &SmoothObjective<Vector>,
    set: &ConstraintSet,
    eps: f64,
    p_fail: f64,
    model: &ErrorModel,
    start: Vector,
    opts: &RunOptions,
) -> Result<RunTrace<Vector>> {
    check_p_fail(p_fail)?;
    let t = rounds_for(objective.curvature_bound, eps, opts)?;
    let delta_fail = p_fail / t as f64;
    let sched = Schedule::new(objective.curvature_bound, objective.smoothness, set);
    let mut lmo = |inp: RoundInput<'_, Vector>, ledger: &mut QueryLedger| -> Result<LmoStep<Vector>> {
        let sigma = sched.fd_step(inp.k) * opts.sigma_scale;
        let r = match set {
            ConstraintSet::L1Ball { radius, .. } => {
                lmo_vector::qlmo_l1(objective, inp.x, sigma, *radius, delta_fail, &inp.model, ledger)?
            }
            ConstraintSet::Simplex { .. } => {
                lmo_vector::qlmo_simplex(objective, inp.x, sigma, delta_fail, &inp.model, ledger)?
            }
            other => return invalid(format!("maximum-finding LMO does not support {}", other.name())),
        };
        Ok(LmoStep {
            s: r.s,
            slack_bound: r.additive_slack_bound,
            failed: false,
            params: vec![("sigma", sigma), ("delta_fail", delta_fail), ("queries", r.charged_queries as f64)],
        })
    };
    fw_run(objective, set, &mut lmo, start, t, model, Variant::QfwMaxfind.name())
}

/// Emulated Jordan gradient (one quantum query) followed by a classical
/// scan for the best vertex. Per-round failure probability `p_fail / T`.
pub fn qfw_jordan_run(
    objective: &SmoothObjective<Vector>,
    set: &ConstraintSet,
    eps: f64,
    p_fail: f64,
    model: &ErrorModel,
    start: Vector,
    opts: &RunOptions,
) -> Result<RunTrace<Vector>> {
    check_p_fail(p_fail)?;
    if !objective.has_gradient() {
        return Err(QfwError::MissingGradient);
    }
    let t = rounds_for(objective.curvature_bound, eps, opts)?;
    let rho = p_fail / t as f64;
    let sched = Schedule::new(objective.curvature_bound, objective.smoothness, set);
    let mut lmo = |inp: RoundInput<'_, Vector>, ledger: &mut QueryLedger| -> Result<LmoStep<Vector>> {
        let r = sched.jordan_radius(inp.k, rho) * opts.sigma_scale;
        let est = oracles::jordan_gradient_emulate(objective, inp.x, r, rho, &inp.model, ledger)?;
        let Guarantee::LInf { bound, .. } = est.guarantee else { unreachable!() };
        let (s, slack) = match set {
            ConstraintSet::L1Ball { radius, .. } => {
                (lmo_vector::exact_lmo_l1(&est.g, *radius)?.s, 2.0 * bound * radius)
            }
            ConstraintSet::Simplex { .. } => (lmo_vector::exact_lmo_simplex(&est.g)?.s, 2.0 * bound),
            other => return invalid(format!("Jordan wiring does not support {}", other.name())),
        };
        Ok(LmoStep {
            s,
            slack_bound: slack,
            failed: est.failed,
            params: vec![("r", r), ("rho", rho), ("linf_bound", bound)],
        })
    };
    fw_run(objective, set, &mut lmo, start, t, model, Variant::QfwJordan.name())
}

/// Latent group norm wiring: per-group finite differences, maximum finding
/// over group dual norms, dual atom of the winning group.
pub fn qfw_group_run(
    objective: &SmoothObjective<Vector>,
    set: &ConstraintSet,
    eps: f64,
    p_fail: f64,
    model: &ErrorModel,
    start: Vector,
    opts: &RunOptions,
) -> Result<RunTrace<Vector>> {
    check_p_fail(p_fail)?;
    let ConstraintSet::LatentGroupBall { groups, p_norms, radius, .. } = set else {
        return invalid(format!("group wiring needs a latent group ball, got {}", set.name()));
    };
    let t = rounds_for(objective.curvature_bound, eps, opts)?;
    let delta_fail = p_fail / t as f64;
    let sched = Schedule::new(objective.curvature_bound, objective.smoothness, set);
    let factor = group_size_factor(groups, p_norms);
    let mut lmo = |inp: RoundInput<'_, Vector>, ledger: &mut QueryLedger| -> Result<LmoStep<Vector>> {
        let sigma = sched.group_fd_step(inp.k, factor) * opts.sigma_scale;
        let r = lmo_vector::qlmo_group(
            objective, inp.x, sigma, delta_fail, groups, p_norms, *radius, &inp.model, ledger,
        )?;
        Ok(LmoStep {
            s: r.s,
            slack_bound: r.additive_slack_bound,
            failed: false,
            params: vec![("sigma", sigma), ("delta_fail", delta_fail), ("queries", r.charged_queries as f64)],
        })
    };
    fw_run(objective, set, &mut lmo, start, t, model, Variant::QfwGroup.name())
}

fn nuclear_radius(set: &ConstraintSet) -> Result<f64> {
    match set {
        ConstraintSet::NuclearBall { radius, .. } => Ok(*radius),
        other => invalid(format!("matrix wiring needs a nuclear-norm ball, got {}", other.name())),
    }
}

fn fetch_gradient<'a>(inp: &RoundInput<'a, Matrix>, ledger: &mut QueryLedger) -> Result<&'a Matrix> {
    // The gradient is supplied by the caller; each fetch counts as one
    // gradient evaluation, separate from the update-direction cost.
    ledger.charge_gradient(1);
    inp.grad.ok_or(QfwError::MissingGradient)
}

/// Fraction of `||M||_F` used as the precision of the coarse power-method
/// pass that estimates sigma1 for the QTSVE schedule.
pub const SIGMA_PREPASS_PRECISION: f64 = 0.25;

/// Nuclear-ball wiring with emulated QTSVE. Round `k` uses singular value
/// precision `(sigma1 - sigma2) / 4` and vector precision
/// `C_f / (2 r (k + 2) sigma1_est)`, where `sigma1_est` comes from a coarse
/// classical power-method pass.
pub fn qfw_matrix_qtsve_run(
    objective: &SmoothObjective<Matrix>,
    set: &ConstraintSet,
    eps: f64,
    model: &ErrorModel,
    start: Matrix,
    opts: &RunOptions,
) -> Result<RunTrace<Matrix>> {
    let radius = nuclear_radius(set)?;
    let t = rounds_for(objective.curvature_bound, eps, opts)?;
    let sched = Schedule::new(objective.curvature_bound, objective.smoothness, set);
    let mut lmo = |inp: RoundInput<'_, Matrix>, ledger: &mut QueryLedger| -> Result<LmoStep<Matrix>> {
        let m = fetch_gradient(&inp, ledger)?;
        let sv = lmo_matrix::singular_values(m);
        let s1 = sv[0];
        let s2 = sv.get(1).copied().unwrap_or(0.0);
        let gap = s1 - s2;
        if !(gap > 1e-12 * s1.max(1.0)) {
            return Err(QfwError::DegenerateGap { sigma1: s1, gap });
        }
        let eps_t = gap / 4.0;
        let frob = m.norm();
        let pre = lmo_matrix::power_method_classical(
            m,
            SIGMA_PREPASS_PRECISION * frob,
            &lmo_matrix::PowerOptions { c0: opts.c0, sigma_hint: Some(frob), start: StartVector::Ones },
            &inp.model,
        )?;
        ledger.charge_matvecs(lmo_matrix::power_matvecs(pre.iterations));
        let sigma_est = (pre.sigma_hat + SIGMA_PREPASS_PRECISION * frob).min(frob);
        let delta = sched.qtsve_delta(inp.k, sigma_est).clamp(lmo_matrix::PRECISION_FLOOR, 0.5);
        let top = lmo_matrix::qtsve_emulate(m, eps_t, delta, &inp.model)?;
        ledger.charge_time(top.charged_cost);
        let total_sq: f64 = sv.iter().map(|s| s * s).sum();
        Ok(LmoStep {
            s: &top.u * top.v.transpose() * (-radius),
            slack_bound: 2.0 * s1 * delta * radius,
            failed: false,
            params: vec![
                ("eps", eps_t),
                ("delta", delta),
                ("frobenius", frob),
                ("p", s1 * s1 / total_sq),
                ("d", sched.dim as f64),
                ("sigma1", s1),
                ("sigma2", s2),
                ("sigma1_est", sigma_est),
            ],
        })
    };
    fw_run(objective, set, &mut lmo, start, t, model, Variant::QfwQtsve.name())
}

fn top_sigma(m: &Matrix) -> Result<f64> {
    let s1 = lmo_matrix::singular_values(m)[0];
    if !(s1 > 1e-300) {
        return Err(QfwError::ChainCollapse(s1));
    }
    Ok(s1)
}

/// Nuclear-ball wiring with the emulated quantum power method:
/// `k = ceil(2 C0 sigma1 ln d / eps)` steps, chain and tomography precision
/// `eps gamma'_min / (16 sigma1)` with `gamma'_min` from a noise-free
/// profiling pass of the same chains.
pub fn qfw_matrix_qpm_run(
    objective: &SmoothObjective<Matrix>,
    set: &ConstraintSet,
    eps: f64,
    model: &ErrorModel,
    start: Matrix,
    opts: &RunOptions,
) -> Result<RunTrace<Matrix>> {
    let radius = nuclear_radius(set)?;
    let t = rounds_for(objective.curvature_bound, eps, opts)?;
    let sched = Schedule::new(objective.curvature_bound, objective.smoothness, set);
    let mut lmo = |inp: RoundInput<'_, Matrix>, ledger: &mut QueryLedger| -> Result<LmoStep<Matrix>> {
        let m = fetch_gradient(&inp, ledger)?;
        let s1 = top_sigma(m)?;
        let k = sched.qpm_iterations(opts.c0, s1, eps);
        let gmin = lmo_matrix::qpm_profile(m, k, opts.start_vector, &inp.model)?;
        let delta = sched.qpm_delta(eps, gmin, s1).clamp(lmo_matrix::PRECISION_FLOOR, 0.5);
        let out = lmo_matrix::qpm_emulate(m, k, delta, delta, opts.start_vector, &inp.model)?;
        ledger.charge_time(out.triple.charged_cost);
        Ok(LmoStep {
            s: &out.triple.u * out.triple.v.transpose() * (-radius),
            slack_bound: radius * eps,
            failed: false,
            params: vec![
                ("k", k as f64),
                ("delta", delta),
                ("gamma_min", gmin),
                ("sigma1", s1),
                ("sigma_hat", out.triple.sigma_hat),
                ("eps_step", out.eps_step),
            ],
        })
    };
    fw_run(objective, set, &mut lmo, start, t, model, Variant::QfwQpm.name())
}

/// Classical power method on the QPM schedule (same chain length, same
/// start vector, no noise). Charged `k d^2` flops per round.
pub fn matrix_power_run(
    objective: &SmoothObjective<Matrix>,
    set: &ConstraintSet,
    eps: f64,
    model: &ErrorModel,
    start: Matrix,
    opts: &RunOptions,
) -> Result<RunTrace<Matrix>> {
    let radius = nuclear_radius(set)?;
    let t = rounds_for(objective.curvature_bound, eps, opts)?;
    let sched = Schedule::new(objective.curvature_bound, objective.smoothness, set);
    let mut lmo = |inp: RoundInput<'_, Matrix>, ledger: &mut QueryLedger| -> Result<LmoStep<Matrix>> {
        let m = fetch_gradient(&inp, ledger)?;
        let s1 = top_sigma(m)?;
        let k = sched.qpm_iterations(opts.c0, s1, eps);
        let (mut u, v) = lmo_matrix::power_iterations(m, k, opts.start_vector, &inp.model)?;
        if u.dot(&(m * &v)) < 0.0 {
            u.neg_mut();
        }
        ledger.charge_matvecs(lmo_matrix::power_matvecs(k));
        ledger.charge_time((k * m.nrows() * m.ncols()) as f64);
        Ok(LmoStep {
            s: &u * v.transpose() * (-radius),
            slack_bound: radius * eps,
            failed: false,
            params: vec![("k", k as f64), ("sigma1", s1)],
        })
    };
    fw_run(objective, set, &mut lmo, start, t, model, Variant::ClassicalPower.name())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_identities() {
        assert_eq!(gamma(0), 1.0);
        assert_eq!(gamma(2), 0.5);
        assert_eq!(iteration_count(1.0, 0.1).unwrap(), 38);
        assert_eq!(iteration_count(3.0, 4.0).unwrap(), 1);
        assert_eq!(iteration_count(0.0, 0.1).unwrap(), 1);
        assert!(iteration_count(1.0, 0.0).is_err());
        let set = ConstraintSet::l1_ball(100, 1.0).unwrap();
        let s = Schedule::new(4.0, 1.0, &set);
        for k in 0..50 {
            let sigma = s.fd_step(k);
            assert!((sigma * 10.0 * (k as f64 + 2.0) - 4.0).abs() < 1e-12);
            let rho = 0.01;
            let b = oracles::jordan_error_bound(100, 1.0, s.jordan_radius(k, rho), rho);
            assert!((2.0 * b - s.slack_allowance(k)).abs() < 1e-12 * s.slack_allowance(k));
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.name()), Some(v));
        }
        assert_eq!(Variant::parse("nope"), None);
    }
}
