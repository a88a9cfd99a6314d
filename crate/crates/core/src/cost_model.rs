//! Predicted per-round costs of each variant, with every asymptotic
//! constant set to 1, `log` read as the natural logarithm and polylog
//! factors pinned to `ln(d)^3`. Predictions are compared with measured
//! ledgers as ratios; absolute agreement is never expected.

use serde::Serialize;

use crate::domain::{Costs, QueryLedger};
use crate::error::{invalid, Result};
use crate::fw_engine::iteration_count;
use crate::lmo_matrix::POLYLOG_EXPONENT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorCostVariant {
    ClassicalFw,
    QfwMaxfind,
    QfwJordan,
    ClassicalGroup,
    QfwGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixCostVariant {
    Power,
    Lanczos,
    Qtsve,
    Qpm,
}

/// Inputs to the formulas. Each variant reads only what it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CostParams {
    pub d: Option<f64>,
    pub curvature: Option<f64>,
    pub eps: Option<f64>,
    pub p_fail: Option<f64>,
    pub lipschitz: Option<f64>,
    pub rho: Option<f64>,
    pub rank: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub gamma_min: Option<f64>,
    pub group_count: Option<f64>,
    pub group_max: Option<f64>,
    pub group_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostPrediction {
    pub variant: String,
    pub iteration_count: f64,
    pub per_round_cost: f64,
    /// Qubit and gate counts, echoed for reports and never asserted.
    pub qubits: Option<f64>,
    pub gates: Option<f64>,
    pub inputs: CostParams,
}

fn need(v: Option<f64>, name: &str, variant: &str) -> Result<f64> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => invalid(format!("{variant}: parameter `{name}` must be finite and > 0, got {x}")),
        None => invalid(format!("{variant}: missing parameter `{name}`")),
    }
}

fn polylog(d: f64) -> f64 {
    d.ln().powi(POLYLOG_EXPONENT)
}

fn iterations(p: &CostParams, variant: &str) -> Result<f64> {
    let cf = need(p.curvature, "curvature", variant)?;
    let eps = need(p.eps, "eps", variant)?;
    Ok(iteration_count(cf, eps)? as f64)
}

pub fn predict_vector(variant: VectorCostVariant, p: &CostParams) -> Result<CostPrediction> {
    let name = match variant {
        VectorCostVariant::ClassicalFw => "classical_fw",
        VectorCostVariant::QfwMaxfind => "qfw_maxfind",
        VectorCostVariant::QfwJordan => "qfw_jordan",
        VectorCostVariant::ClassicalGroup => "classical_group",
        VectorCostVariant::QfwGroup => "qfw_group",
    };
    let iteration_count = iterations(p, name)?;
    let log_term = || -> Result<f64> {
        let cf = need(p.curvature, "curvature", name)?;
        let eps = need(p.eps, "eps", name)?;
        let pf = need(p.p_fail, "p_fail", name)?;
        Ok((cf / (pf * eps)).ln())
    };
    let (per_round, qubits, gates) = match variant {
        VectorCostVariant::ClassicalFw => (need(p.d, "d", name)?, None, None),
        VectorCostVariant::QfwMaxfind => {
            let d = need(p.d, "d", name)?;
            let eps = need(p.eps, "eps", name)?;
            (d.sqrt() * log_term()?, Some(d + (1.0 / eps).ln()), Some(d.sqrt()))
        }
        VectorCostVariant::QfwJordan => {
            let d = need(p.d, "d", name)?;
            let q = match (p.lipschitz, p.rho, p.eps) {
                (Some(g), Some(rho), Some(eps)) => Some(d * (g * d / (rho * eps)).ln()),
                _ => None,
            };
            (1.0, q, Some(d * d.ln()))
        }
        VectorCostVariant::ClassicalGroup => (need(p.group_total, "group_total", name)?, None, None),
        VectorCostVariant::QfwGroup => {
            let n = need(p.group_count, "group_count", name)?;
            let gmax = need(p.group_max, "group_max", name)?;
            (n.sqrt() * gmax * log_term()?, None, None)
        }
    };
    Ok(CostPrediction {
        variant: name.to_string(),
        iteration_count,
        per_round_cost: per_round,
        qubits,
        gates,
        inputs: p.clone(),
    })
}

pub fn predict_matrix(variant: MatrixCostVariant, p: &CostParams) -> Result<CostPrediction> {
    let name = match variant {
        MatrixCostVariant::Power => "power",
        MatrixCostVariant::Lanczos => "lanczos",
        MatrixCostVariant::Qtsve => "qtsve",
        MatrixCostVariant::Qpm => "qpm",
    };
    let iteration_count = iterations(p, name)?;
    let d = need(p.d, "d", name)?;
    let s1 = need(p.sigma1, "sigma1", name)?;
    let eps = need(p.eps, "eps", name)?;
    let per_round = match variant {
        MatrixCostVariant::Power => s1 * d * d * d.ln() / eps,
        MatrixCostVariant::Lanczos => s1.sqrt() * d * d * d.ln() / eps.sqrt(),
        MatrixCostVariant::Qtsve => {
            let r = need(p.rank, "rank", name)?;
            let s2 = p.sigma2.unwrap_or(0.0);
            if !(s1 > s2) {
                return invalid(format!("{name}: needs sigma1 > sigma2, got {s1} and {s2}"));
            }
            r * s1.powi(3) * d * polylog(d) / ((s1 - s2) * eps * eps)
        }
        MatrixCostVariant::Qpm => {
            let r = need(p.rank, "rank", name)?;
            let g = need(p.gamma_min, "gamma_min", name)?;
            if !(s1 < 1.0) {
                return invalid(format!("{name}: needs sigma1 < 1, got {s1}"));
            }
            r.sqrt() * s1.powi(4) * d * polylog(d) / ((1.0 - s1) * g.powi(3) * eps.powi(3))
        }
    };
    Ok(CostPrediction {
        variant: name.to_string(),
        iteration_count,
        per_round_cost: per_round,
        qubits: None,
        gates: None,
        inputs: p.clone(),
    })
}

/// Which ledger column a comparison reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    FunctionQueries,
    QuantumQueries,
    TimeCost,
}

impl Measure {
    pub fn read(&self, c: &Costs) -> f64 {
        match self {
            Measure::FunctionQueries => c.function_queries as f64,
            Measure::QuantumQueries => c.quantum_queries as f64,
            Measure::TimeCost => c.time_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub variant: String,
    pub measure: Measure,
    pub rounds: usize,
    /// Mean measured cost per round.
    pub measured: f64,
    pub predicted: f64,
    pub ratio: f64,
}

/// Mean per-round measured cost against the predicted per-round cost.
pub fn compare(ledger: &QueryLedger, prediction: &CostPrediction, measure: Measure) -> CostReport {
    let rounds = ledger.rounds();
    let measured = if rounds.is_empty() {
        f64::NAN
    } else {
        rounds.iter().map(|c| measure.read(c)).sum::<f64>() / rounds.len() as f64
    };
    CostReport {
        variant: prediction.variant.clone(),
        measure,
        rounds: rounds.len(),
        measured,
        predicted: prediction.per_round_cost,
        ratio: measured / prediction.per_round_cost,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let lx: Vec<f64> = xs[..n].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys[..n].iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> CostParams {
        CostParams { curvature: Some(1.0), eps: Some(0.1), ..Default::default() }
    }

    #[test]
    fn vector_table_examples() {
        let p = CostParams { d: Some(100.0), ..base() };
        assert_eq!(predict_vector(VectorCostVariant::ClassicalFw, &p).unwrap().per_round_cost, 100.0);
        let p = CostParams { d: Some(100.0), p_fail: Some(0.01), ..base() };
        let q = predict_vector(VectorCostVariant::QfwMaxfind, &p).unwrap();
        assert!((q.per_round_cost - 10.0 * 1000f64.ln()).abs() < 1e-12);
        assert_eq!(q.iteration_count, 38.0);
        for d in [10.0, 1e6] {
            let p = CostParams { d: Some(d), ..base() };
            assert_eq!(predict_vector(VectorCostVariant::QfwJordan, &p).unwrap().per_round_cost, 1.0);
        }
        assert!(predict_vector(VectorCostVariant::QfwMaxfind, &base()).is_err());
    }

    #[test]
    fn matrix_table_examples() {
        let p = CostParams { d: Some(50.0), sigma1: Some(0.9), ..base() };
        let pw = predict_matrix(MatrixCostVariant::Power, &p).unwrap();
        assert!((pw.per_round_cost - 0.9 * 2500.0 * 50f64.ln() / 0.1).abs() < 1e-9);
        let p = CostParams { rank: Some(3.0), sigma2: Some(0.5), ..p };
        let q = predict_matrix(MatrixCostVariant::Qtsve, &p).unwrap();
        let want = 3.0 * 0.729 * 50.0 * 50f64.ln().powi(3) / (0.4 * 0.01);
        assert!((q.per_round_cost - want).abs() < 1e-9 * want);
    }

    #[test]
    fn qpm_grows_slower_in_d_than_qtsve_at_full_rank() {
        let at = |v, d: f64| {
            let p = CostParams {
                d: Some(d),
                rank: Some(d),
                sigma1: Some(0.9),
                sigma2: Some(0.5),
                gamma_min: Some(0.5),
                ..base()
            };
            predict_matrix(v, &p).unwrap().per_round_cost
        };
        let qpm_growth = at(MatrixCostVariant::Qpm, 200.0) / at(MatrixCostVariant::Qpm, 100.0);
        let qtsve_growth = at(MatrixCostVariant::Qtsve, 200.0) / at(MatrixCostVariant::Qtsve, 100.0);
        assert!(qpm_growth < qtsve_growth);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [64.0, 256.0, 1024.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.sqrt()).collect();
        assert!((log_log_slope(&xs, &ys) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jordan_compare_is_exact() {
        let mut l = QueryLedger::new();
        for _ in 0..5 {
            l.charge_quantum(1);
            l.close_round();
        }
        let p = CostParams { d: Some(30.0), ..base() };
        let pred = predict_vector(VectorCostVariant::QfwJordan, &p).unwrap();
        let r = compare(&l, &pred, Measure::QuantumQueries);
        assert_eq!((r.measured, r.predicted, r.ratio), (1.0, 1.0, 1.0));
    }
}
