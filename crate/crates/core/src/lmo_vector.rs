//! Linear minimization oracles over the vector constraint sets, exact and
//! emulated, plus the Dürr–Høyer maximum-finding emulator they share.

use rand::Rng;

use crate::domain::sets::lp_norm;
use crate::domain::{ErrorModel, QueryLedger, SmoothObjective, Vector};
use crate::error::{invalid, QfwError, Result};

const STREAM_MAX_FIND: u64 = 0xD0E1;

#[derive(Debug, Clone, PartialEq)]
pub struct LmoResult<X> {
    /// The chosen atom.
    pub s: X,
    /// `<s, g>` for the gradient (or gradient estimate) the oracle saw.
    pub inner_value: f64,
    /// Guaranteed bound on `<s, grad f> - min_{s'} <s', grad f>` on success.
    pub additive_slack_bound: f64,
    pub charged_queries: u64,
}

fn sign(v: f64) -> f64 {
    // sign(0) = +1, so a zero gradient picks -e_i.
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn exact_lmo_l1(g: &Vector, radius: f64) -> Result<LmoResult<Vector>> {
    if g.is_empty() {
        return Err(QfwError::EmptyDomain);
    }
    if !(radius > 0.0) {
        return invalid(format!("radius must be > 0, got {radius}"));
    }
    let mut best = 0;
    for i in 1..g.len() {
        if g[i].abs() > g[best].abs() {
            best = i;
        }
    }
    let mut s = Vector::zeros(g.len());
    s[best] = -radius * sign(g[best]);
    Ok(LmoResult { inner_value: s[best] * g[best], s, additive_slack_bound: 0.0, charged_queries: 0 })
}

pub fn exact_lmo_simplex(g: &Vector) -> Result<LmoResult<Vector>> {
    if g.is_empty() {
        return Err(QfwError::EmptyDomain);
    }
    let mut best = 0;
    for i in 1..g.len() {
        if g[i] < g[best] {
            best = i;
        }
    }
    let mut s = Vector::zeros(g.len());
    s[best] = 1.0;
    Ok(LmoResult { inner_value: g[best], s, additive_slack_bound: 0.0, charged_queries: 0 })
}

/// Dual exponent of `p`: `1/p + 1/q = 1`.
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `max_i ||g restricted to group i||_{q_i}` and the (lowest) maximizing group.
pub fn group_dual_norm(g: &Vector, groups: &[Vec<usize>], p_norms: &[f64]) -> Result<(f64, usize)> {
    if groups.is_empty() {
        return Err(QfwError::EmptyDomain);
    }
    if groups.len() != p_norms.len() {
        return invalid("groups and p-norms differ in length");
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (gi, (grp, &p)) in groups.iter().zip(p_norms).enumerate() {
        if !(p >= 1.0) {
            return invalid(format!("group norms need p >= 1, got {p}"));
        }
        let v = restricted_dual_norm(g, grp, p);
        if v > best.0 {
            best = (v, gi);
        }
    }
    Ok(best)
}

fn restricted_dual_norm(g: &Vector, group: &[usize], p: f64) -> f64 {
    let vals: Vec<f64> = group.iter().map(|&i| g[i]).collect();
    lp_norm(vals.iter(), dual_exponent(p))
}

/// Unit-`l_p` atom supported on `group` minimizing `<s, g>`, scaled by `radius`.
fn group_atom(g: &Vector, group: &[usize], p: f64, radius: f64) -> Vector {
    let mut s = Vector::zeros(g.len());
    if p == 1.0 {
        let mut best = group[0];
        for &i in group {
            if g[i].abs() > g[best].abs() {
                best = i;
            }
        }
        s[best] = -radius * sign(g[best]);
        return s;
    }
    if p.is_infinite() {
        for &i in group {
            s[i] = -radius * sign(g[i]);
        }
        return s;
    }
    let q = dual_exponent(p);
    for &i in group {
        s[i] = -sign(g[i]) * g[i].abs().powf(q - 1.0);
    }
    let norm = lp_norm(group.iter().map(|&i| &s[i]), p);
    if norm > 0.0 {
        for &i in group {
            s[i] *= radius / norm;
        }
    } else {
        // Zero gradient on the group: every unit atom ties.
        s[group[0]] = -radius;
    }
    s
}

pub fn exact_lmo_group(
    g: &Vector,
    groups: &[Vec<usize>],
    p_norms: &[f64],
    radius: f64,
) -> Result<LmoResult<Vector>> {
    let (_, gi) = group_dual_norm(g, groups, p_norms)?;
    let s = group_atom(g, &groups[gi], p_norms[gi], radius);
    Ok(LmoResult { inner_value: s.dot(g), s, additive_slack_bound: 0.0, charged_queries: 0 })
}

/// Outcome of the emulated maximum finding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxFind {
    pub index: usize,
    pub charged_queries: u64,
    /// Repetitions whose threshold chain reached the maximum within budget.
    pub converged_repetitions: u32,
    pub repetitions: u32,
}

/// Query budget of one Dürr–Høyer repetition: `ceil(22.5 sqrt(d) + 1.4 log2 d)`.
pub fn max_find_budget(d: usize) -> u64 {
    let d = d as f64;
    (22.5 * d.sqrt() + 1.4 * d.log2()).ceil() as u64
}

/// Repetitions needed for failure probability `delta_fail`.
pub fn max_find_repetitions(delta_fail: f64) -> u32 {
    ((1.0 / delta_fail).log2().ceil() as u32).max(1)
}

// Strict total order on (value, index): larger value wins, lower index breaks ties.
fn beats(values: &[f64], i: usize, j: usize) -> bool {
    values[i] > values[j] || (values[i] == values[j] && i < j)
}

/// Emulated Dürr–Høyer maximum finding over `values`, which already carry
/// whatever oracle error the caller injected.
///
/// Each repetition starts from a uniformly random threshold index and
/// repeatedly jumps to a uniformly random index that beats the threshold,
/// paying `ceil(sqrt(d/m))` queries per jump when `m` indices beat it. A
/// repetition runs for its full budget (the algorithm stops on elapsed
/// time, not on success), so each one is charged the whole budget. The best
/// of `ceil(log2(1/delta_fail))` repetitions is returned.
pub fn duerr_hoyer_max_find(values: &[f64], delta_fail: f64, model: &ErrorModel) -> Result<MaxFind> {
    let d = values.len();
    if d == 0 {
        return Err(QfwError::EmptyDomain);
    }
    if !(delta_fail > 0.0 && delta_fail < 1.0) {
        return invalid(format!("failure probability must be in (0, 1), got {delta_fail}"));
    }
    let budget = max_find_budget(d);
    let reps = max_find_repetitions(delta_fail);
    let mut rng = model.rng(STREAM_MAX_FIND);
    let mut best: Option<usize> = None;
    let mut converged = 0;
    let mut marked = Vec::with_capacity(d);
    for _ in 0..reps {
        let mut threshold = rng.random_range(0..d);
        let mut used = 1u64;
        loop {
            marked.clear();
            marked.extend((0..d).filter(|&i| beats(values, i, threshold)));
            let m = marked.len();
            if m == 0 {
                converged += 1;
                break;
            }
            let step = ((d as f64) / (m as f64)).sqrt().ceil() as u64;
            if used + step > budget {
                break;
            }
            used += step;
            threshold = marked[rng.random_range(0..m)];
        }
        best = Some(match best {
            Some(b) if !beats(values, threshold, b) => b,
            _ => threshold,
        });
    }
    Ok(MaxFind {
        index: best.expect("at least one repetition"),
        charged_queries: budget * reps as u64,
        converged_repetitions: converged,
        repetitions: reps,
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return invalid(format!("finite-difference step must be > 0, got {sigma}"));
    }
    Ok(())
}

/// Forward-difference components `(f(x + sigma e_i) - f(x)) / sigma` for all
/// coordinates, evaluated outside the ledger. The emulated quantum oracle
/// charges for them by formula.
fn fd_values(f: &SmoothObjective<Vector>, x: &Vector, sigma: f64) -> Vec<f64> {
    f.axis_increments_uncharged(x, sigma).into_iter().map(|v| v / sigma).collect()
}

/// Quantum LMO over the l1 ball: finite-difference components behind the
/// value oracle, then maximum finding over their magnitudes.
pub fn qlmo_l1(
    f: &SmoothObjective<Vector>,
    x: &Vector,
    sigma: f64,
    radius: f64,
    delta_fail: f64,
    model: &ErrorModel,
    ledger: &mut QueryLedger,
) -> Result<LmoResult<Vector>> {
    check_sigma(sigma)?;
    let g = fd_values(f, x, sigma);
    let mags: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    let found = duerr_hoyer_max_find(&mags, delta_fail, model)?;
    let queries = 2 * found.charged_queries;
    ledger.charge_quantum(queries);
    let i = found.index;
    let mut s = Vector::zeros(x.len());
    s[i] = -radius * sign(g[i]);
    let d = x.len() as f64;
    Ok(LmoResult {
        inner_value: s[i] * g[i],
        s,
        additive_slack_bound: radius * d.sqrt() * f.smoothness * sigma,
        charged_queries: queries,
    })
}

/// Quantum LMO over the simplex: minimum finding over the components.
pub fn qlmo_simplex(
    f: &SmoothObjective<Vector>,
    x: &Vector,
    sigma: f64,
    delta_fail: f64,
    model: &ErrorModel,
    ledger: &mut QueryLedger,
) -> Result<LmoResult<Vector>> {
    check_sigma(sigma)?;
    let g = fd_values(f, x, sigma);
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let found = duerr_hoyer_max_find(&neg, delta_fail, model)?;
    let queries = 2 * found.charged_queries;
    ledger.charge_quantum(queries);
    let i = found.index;
    let mut s = Vector::zeros(x.len());
    s[i] = 1.0;
    let d = x.len() as f64;
    Ok(LmoResult {
        inner_value: g[i],
        s,
        additive_slack_bound: d.sqrt() * f.smoothness * sigma,
        charged_queries: queries,
    })
}

/// `max_i |g_i|^{1/p_i}` over groups, the factor that scales the group
/// schedule and slack.
pub fn group_size_factor(groups: &[Vec<usize>], p_norms: &[f64]) -> f64 {
    groups
        .iter()
        .zip(p_norms)
        .map(|(g, &p)| (g.len() as f64).powf(1.0 / p))
        .fold(0.0f64, f64::max)
}

/// Quantum LMO over a latent group ball: per-group dual norms of the
/// finite-difference gradient, maximum finding over groups, then the dual
/// atom of the winning group.
#[allow(clippy::too_many_arguments)]
pub fn qlmo_group(
    f: &SmoothObjective<Vector>,
    x: &Vector,
    sigma: f64,
    delta_fail: f64,
    groups: &[Vec<usize>],
    p_norms: &[f64],
    radius: f64,
    model: &ErrorModel,
    ledger: &mut QueryLedger,
) -> Result<LmoResult<Vector>> {
    check_sigma(sigma)?;
    if groups.len() != p_norms.len() || groups.is_empty() {
        return invalid("groups and p-norms must be nonempty and of equal length");
    }
    let g = Vector::from_vec(fd_values(f, x, sigma));
    let norms: Vec<f64> =
        groups.iter().zip(p_norms).map(|(grp, &p)| restricted_dual_norm(&g, grp, p)).collect();
    let found = duerr_hoyer_max_find(&norms, delta_fail, model)?;
    let widest = groups.iter().map(|g| g.len()).max().unwrap_or(0) as u64;
    let queries = 2 * widest * found.charged_queries;
    ledger.charge_quantum(queries);
    let gi = found.index;
    let s = group_atom(&g, &groups[gi], p_norms[gi], radius);
    let d = x.len() as f64;
    Ok(LmoResult {
        inner_value: s.dot(&g),
        s,
        additive_slack_bound: radius
            * d.sqrt()
            * f.smoothness
            * sigma
            * group_size_factor(groups, p_norms),
        charged_queries: queries,
    })
}

/// A sparse atom as (index, value) pairs.
pub type SparseAtom = Vec<(usize, f64)>;

/// LMO over a finite set of `sparsity`-sparse atoms: maximum finding over
/// `-<a_j, g>`, each evaluation charged `sparsity` accesses.
pub fn sparse_atom_lmo(
    atoms: &[SparseAtom],
    sparsity: usize,
    g: &Vector,
    delta_fail: f64,
    model: &ErrorModel,
    ledger: &mut QueryLedger,
) -> Result<LmoResult<Vector>> {
    if atoms.is_empty() {
        return Err(QfwError::EmptyDomain);
    }
    let mut scores = Vec::with_capacity(atoms.len());
    for (j, a) in atoms.iter().enumerate() {
        if a.len() > sparsity {
            return invalid(format!("atom {j} has {} nonzeros, limit is {sparsity}", a.len()));
        }
        let mut dot = 0.0;
        for &(i, v) in a {
            if i >= g.len() {
                return Err(QfwError::DimensionMismatch { expected: g.len(), got: i + 1 });
            }
            dot += v * g[i];
        }
        scores.push(-dot);
    }
    let found = duerr_hoyer_max_find(&scores, delta_fail, model)?;
    let queries = sparsity as u64 * found.charged_queries;
    ledger.charge_quantum(queries);
    let mut s = Vector::zeros(g.len());
    for &(i, v) in &atoms[found.index] {
        s[i] += v;
    }
    Ok(LmoResult {
        inner_value: -scores[found.index],
        s,
        additive_slack_bound: 0.0,
        charged_queries: queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::NoiseMode;

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    #[test]
    fn exact_l1_examples() {
        let r = exact_lmo_l1(&v(&[3.0, -5.0, 1.0]), 1.0).unwrap();
        assert_eq!(r.s, v(&[0.0, 1.0, 0.0]));
        assert_eq!(r.inner_value, -5.0);
        let r = exact_lmo_l1(&v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(r.s, v(&[-1.0, 0.0]));
        assert_eq!(r.inner_value, 0.0);
        let r = exact_lmo_l1(&v(&[1.0, 1.0]), 2.0).unwrap();
        assert_eq!(r.s, v(&[-2.0, 0.0]));
        assert_eq!(r.inner_value, -2.0);
        assert!(exact_lmo_l1(&Vector::zeros(0), 1.0).is_err());
    }

    #[test]
    fn exact_simplex_examples() {
        assert_eq!(exact_lmo_simplex(&v(&[2.0, -1.0, 0.0])).unwrap().s, v(&[0.0, 1.0, 0.0]));
        let c = exact_lmo_simplex(&v(&[4.0, 4.0, 4.0])).unwrap();
        assert_eq!(c.s, v(&[1.0, 0.0, 0.0]));
        assert_eq!(c.inner_value, 4.0);
        assert_eq!(exact_lmo_simplex(&v(&[0.5, 0.5, 0.4])).unwrap().s, v(&[0.0, 0.0, 1.0]));
    }

    #[test]
    fn dual_norm_examples() {
        let g = v(&[3.0, 4.0, 0.0]);
        let (val, gi) = group_dual_norm(&g, &[vec![0, 1], vec![1, 2]], &[2.0, 2.0]).unwrap();
        assert_eq!((val, gi), (5.0, 0));
        let (val, _) = group_dual_norm(&v(&[1.0, -7.0, 2.0]), &[vec![0, 1, 2]], &[1.0]).unwrap();
        assert_eq!(val, 7.0);
        let (val, _) =
            group_dual_norm(&v(&[1.0, -7.0, 2.0]), &[vec![0, 1, 2]], &[f64::INFINITY]).unwrap();
        assert_eq!(val, 10.0);
        assert!(group_dual_norm(&g, &[vec![0, 1, 2]], &[0.5]).is_err());
    }

    #[test]
    fn group_atom_attains_dual_norm() {
        let g = v(&[0.3, -1.2, 0.7, 2.0, -0.1]);
        let groups = vec![vec![0, 1, 2], vec![2, 3, 4]];
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let ps = [p, p];
            let r = exact_lmo_group(&g, &groups, &ps, 1.0).unwrap();
            let (dn, gi) = group_dual_norm(&g, &groups, &ps).unwrap();
            assert!((r.inner_value + dn).abs() < 1e-12, "p={p}");
            let on_group = lp_norm(groups[gi].iter().map(|&i| &r.s[i]), p);
            assert!((on_group - 1.0).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn max_find_single_element_and_budget() {
        let m = ErrorModel::new(NoiseMode::Uniform, 1);
        let r = duerr_hoyer_max_find(&[0.3], 0.25, &m).unwrap();
        assert_eq!(r.index, 0);
        assert_eq!(r.charged_queries, max_find_budget(1) * 2);
        assert_eq!(max_find_budget(64), (22.5f64 * 8.0 + 1.4 * 6.0).ceil() as u64);
        assert!(duerr_hoyer_max_find(&[], 0.1, &m).is_err());
        assert!(duerr_hoyer_max_find(&[1.0], 1.0, &m).is_err());
    }

    #[test]
    fn max_find_prefers_lowest_index_on_ties() {
        let m = ErrorModel::new(NoiseMode::Uniform, 9);
        let r = duerr_hoyer_max_find(&[1.0, 2.0, 2.0, 0.0], 0.01, &m).unwrap();
        assert_eq!(r.index, 1);
    }

    #[test]
    fn sparse_atoms_validate_sparsity() {
        let m = ErrorModel::new(NoiseMode::Uniform, 9);
        let mut l = QueryLedger::new();
        let atoms = vec![vec![(0, 1.0), (1, 1.0)]];
        assert!(sparse_atom_lmo(&atoms, 1, &v(&[1.0, 2.0]), 0.1, &m, &mut l).is_err());
    }
}
