//! One run: build the problem, dispatch the variant, write the artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qfw_core::cost_model::{
    compare, predict_matrix, predict_vector, CostParams, CostPrediction, CostReport, Measure, MatrixCostVariant,
    VectorCostVariant,
};
use qfw_core::fw_engine::{
    self, exact_fw_run, iteration_count, RoundDetail, RunOptions, RunTrace, TraceRow, Variant,
};
use qfw_core::lmo_matrix::QPM_SCALED_SIGMA;
use qfw_core::problems::{self, ProblemInstance, Reference};
use qfw_core::{ConstraintSet, Costs, ErrorModel, FwPoint, Matrix, Vector};
use serde::Serialize;

use crate::config::{Config, ProblemKind, ProblemSpec};
use crate::CliError;

/// Schema tag written into every manifest.
pub const SCHEMA: &str = "qfw-run/1";
pub const TRACE_COLUMNS: [&str; 8] = [
    "t",
    "gamma",
    "f_value",
    "duality_gap",
    "h_bound",
    "cum_function_queries",
    "cum_quantum_queries",
    "cum_time_cost",
];

pub enum Instance {
    Vector(ProblemInstance<Vector>),
    Matrix(ProblemInstance<Matrix>),
}

impl Instance {
    pub fn reference(&self) -> Reference {
        match self {
            Instance::Vector(p) => p.reference,
            Instance::Matrix(p) => p.reference,
        }
    }
}

fn config_err(e: qfw_core::QfwError) -> CliError {
    CliError::Config(e.to_string())
}

pub fn build_problem(spec: &ProblemSpec, seed: u64) -> Result<Instance, CliError> {
    let d = spec.d;
    let radius = spec.radius.unwrap_or(1.0);
    let inst = match spec.kind {
        ProblemKind::LeastSquaresL1 => Instance::Vector(
            problems::make_least_squares_l1(
                d,
                spec.n_rows.unwrap_or((d / 2).max(1)),
                spec.sparsity.unwrap_or(d.min(3)),
                spec.noise.unwrap_or(0.0),
                radius,
                seed,
            )
            .map_err(config_err)?,
        ),
        ProblemKind::L1Quadratic => {
            Instance::Vector(problems::make_l1_quadratic(d, radius, seed).map_err(config_err)?)
        }
        ProblemKind::SimplexQuadratic => {
            Instance::Vector(problems::make_simplex_quadratic(d, seed).map_err(config_err)?)
        }
        ProblemKind::GroupQuadratic => Instance::Vector(
            problems::make_group_instance(
                d,
                spec.groups.clone().unwrap_or_default(),
                spec.p_norms.clone().unwrap_or_default(),
                radius,
                spec.scale.unwrap_or(0.5),
                seed,
            )
            .map_err(config_err)?,
        ),
        ProblemKind::MatrixCompletion => Instance::Matrix(
            problems::make_matrix_completion(
                d,
                spec.rank.unwrap_or(d.min(3)),
                spec.obs_fraction.unwrap_or(0.3),
                radius,
                seed,
            )
            .map_err(config_err)?,
        ),
        ProblemKind::PlantedSpectrum => Instance::Matrix(
            problems::make_planted_spectrum(d, spec.sigmas.as_deref().unwrap_or(&[]), radius, seed)
                .map_err(config_err)?,
        ),
    };
    Ok(inst)
}

#[derive(Debug, Clone, Serialize)]
pub struct PerRound {
    pub function_queries: f64,
    pub quantum_queries: f64,
    pub time_cost: f64,
    pub gradient_evals: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub variant: String,
    pub problem: ProblemKind,
    pub d: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub p_fail: f64,
    pub iterations: usize,
    pub final_value: f64,
    pub reference: Reference,
    pub final_error: f64,
    pub tolerance: f64,
    pub success: bool,
    pub final_gap: f64,
    pub best_gap: f64,
    pub slack_within_allowance: bool,
    pub oracle_failures: usize,
    pub totals: Costs,
    pub per_round: PerRound,
    pub prediction: Option<CostPrediction>,
    pub comparison: Option<CostReport>,
}

/// In-memory result of one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub summary: Summary,
    pub rows: Vec<TraceRow>,
    pub details: Vec<RoundDetail>,
}

fn mean_param(details: &[RoundDetail], key: &str) -> Option<f64> {
    let vals: Vec<f64> = details.iter().filter_map(|d| d.params.get(key).copied()).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

fn predict(
    variant: Variant,
    cfg: &Config,
    set: &ConstraintSet,
    curvature: f64,
    lipschitz: Option<f64>,
    details: &[RoundDetail],
) -> Option<(CostPrediction, Measure)> {
    let spec = &cfg.problem;
    let mut p = CostParams {
        curvature: Some(curvature),
        eps: Some(cfg.run.epsilon),
        p_fail: Some(cfg.run.p_fail),
        lipschitz,
        ..Default::default()
    };
    let vector = |v: VectorCostVariant, p: CostParams, m: Measure| predict_vector(v, &p).ok().map(|x| (x, m));
    let matrix = |v: MatrixCostVariant, p: CostParams| predict_matrix(v, &p).ok().map(|x| (x, Measure::TimeCost));
    match variant {
        Variant::ExactFw => None,
        Variant::ClassicalFw => {
            p.d = Some(set.dim() as f64);
            vector(VectorCostVariant::ClassicalFw, p, Measure::FunctionQueries)
        }
        Variant::QfwMaxfind => {
            p.d = Some(set.dim() as f64);
            vector(VectorCostVariant::QfwMaxfind, p, Measure::QuantumQueries)
        }
        Variant::QfwJordan => {
            p.d = Some(set.dim() as f64);
            p.rho = mean_param(details, "rho");
            vector(VectorCostVariant::QfwJordan, p, Measure::QuantumQueries)
        }
        Variant::QfwGroup => {
            let ConstraintSet::LatentGroupBall { groups, .. } = set else { return None };
            p.d = Some(set.dim() as f64);
            p.group_count = Some(groups.len() as f64);
            p.group_max = groups.iter().map(|g| g.len()).max().map(|v| v as f64);
            p.group_total = Some(groups.iter().map(|g| g.len()).sum::<usize>() as f64);
            vector(VectorCostVariant::QfwGroup, p, Measure::QuantumQueries)
        }
        Variant::QfwQtsve | Variant::QfwQpm | Variant::ClassicalPower => {
            p.d = Some(spec.d as f64);
            p.rank = Some(match spec.kind {
                ProblemKind::PlantedSpectrum => spec.sigmas.as_ref().map_or(1, |s| s.len()),
                _ => spec.rank.unwrap_or(spec.d.min(3)),
            } as f64);
            p.sigma1 = mean_param(details, "sigma1");
            p.sigma2 = mean_param(details, "sigma2");
            p.gamma_min = mean_param(details, "gamma_min");
            match variant {
                Variant::QfwQtsve => matrix(MatrixCostVariant::Qtsve, p),
                Variant::QfwQpm => {
                    // The emulator works on the matrix rescaled to sigma1 = 0.9.
                    p.sigma1 = Some(QPM_SCALED_SIGMA);
                    matrix(MatrixCostVariant::Qpm, p)
                }
                _ => matrix(MatrixCostVariant::Power, p),
            }
        }
    }
}

fn record<X: FwPoint>(
    cfg: &Config,
    variant: Variant,
    inst: &ProblemInstance<X>,
    trace: RunTrace<X>,
) -> RunRecord {
    let reference = inst.reference;
    let final_value = trace.final_value();
    let final_error = final_value - reference.value;
    let tolerance = reference.tolerance(cfg.run.epsilon);
    let best_gap = trace.rows.last().map_or(f64::NAN, |r| r.best_gap);
    let n = trace.iterations().max(1) as f64;
    let totals = trace.ledger.totals();
    let prediction = predict(
        variant,
        cfg,
        &inst.set,
        inst.objective.curvature_bound,
        inst.objective.lipschitz,
        &trace.details,
    );
    let comparison = prediction.as_ref().map(|(p, m)| compare(&trace.ledger, p, *m));
    RunRecord {
        summary: Summary {
            schema: SCHEMA,
            variant: variant.name().to_string(),
            problem: cfg.problem.kind,
            d: cfg.problem.d,
            seed: cfg.run.seed,
            epsilon: cfg.run.epsilon,
            p_fail: cfg.run.p_fail,
            iterations: trace.iterations(),
            final_value,
            reference,
            final_error,
            tolerance,
            success: final_error <= tolerance,
            final_gap: trace.final_gap(),
            best_gap,
            slack_within_allowance: trace.slack_within_allowance(),
            oracle_failures: trace.details.iter().filter(|d| d.failed).count(),
            totals,
            per_round: PerRound {
                function_queries: totals.function_queries as f64 / n,
                quantum_queries: totals.quantum_queries as f64 / n,
                time_cost: totals.time_cost / n,
                gradient_evals: totals.gradient_evals as f64 / n,
            },
            prediction: prediction.map(|(p, _)| p),
            comparison,
        },
        rows: trace.rows,
        details: trace.details,
    }
}

/// Runs the configured variant. `opts` carries knobs that are not part of
/// the config file (the fault-injection scale).
pub fn execute(cfg: &Config, sigma_scale: f64) -> Result<RunRecord, CliError> {
    cfg.validate()?;
    let variant = cfg.variant()?;
    let opts = RunOptions { sigma_scale, c0: cfg.run.c0, iterations: cfg.run.iterations, ..Default::default() };
    let model = ErrorModel::new(cfg.run.error_model, cfg.run.seed);
    let eps = cfg.run.epsilon;
    let pf = cfg.run.p_fail;
    match build_problem(&cfg.problem, cfg.problem_seed())? {
        Instance::Vector(inst) => {
            let (f, set, x0) = (&inst.objective, &inst.set, inst.start.clone());
            let trace = match variant {
                Variant::ExactFw => {
                    let t = match opts.iterations {
                        Some(t) => t,
                        None => iteration_count(f.curvature_bound, eps)?,
                    };
                    exact_fw_run(f, set, x0, t)?
                }
                Variant::ClassicalFw => fw_engine::classical_fw_run(f, set, eps, x0, &opts)?,
                Variant::QfwMaxfind => fw_engine::qfw_vector_run(f, set, eps, pf, &model, x0, &opts)?,
                Variant::QfwJordan => fw_engine::qfw_jordan_run(f, set, eps, pf, &model, x0, &opts)?,
                Variant::QfwGroup => fw_engine::qfw_group_run(f, set, eps, pf, &model, x0, &opts)?,
                other => return Err(CliError::Config(format!("{} needs a matrix problem", other.name()))),
            };
            Ok(record(cfg, variant, &inst, trace))
        }
        Instance::Matrix(inst) => {
            let (f, set, x0) = (&inst.objective, &inst.set, inst.start.clone());
            let trace = match variant {
                Variant::ExactFw => {
                    let t = match opts.iterations {
                        Some(t) => t,
                        None => iteration_count(f.curvature_bound, eps)?,
                    };
                    exact_fw_run(f, set, x0, t)?
                }
                Variant::QfwQtsve => fw_engine::qfw_matrix_qtsve_run(f, set, eps, &model, x0, &opts)?,
                Variant::QfwQpm => fw_engine::qfw_matrix_qpm_run(f, set, eps, &model, x0, &opts)?,
                Variant::ClassicalPower => fw_engine::matrix_power_run(f, set, eps, &model, x0, &opts)?,
                other => return Err(CliError::Config(format!("{} needs a vector problem", other.name()))),
            };
            Ok(record(cfg, variant, &inst, trace))
        }
    }
}

fn float(out: &mut String, v: f64) {
    // 17 significant digits round-trip every f64.
    let _ = write!(out, "{v:.16e}");
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},", r.t);
        float(&mut out, r.gamma);
        out.push(',');
        float(&mut out, r.f_value);
        out.push(',');
        float(&mut out, r.duality_gap);
        out.push(',');
        float(&mut out, r.h_bound);
        let _ = write!(out, ",{},{},", r.cumulative.function_queries, r.cumulative.quantum_queries);
        float(&mut out, r.cumulative.time_cost);
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'static str,
    artifact_version: &'static str,
    seed: u64,
    trace_columns: [&'static str; 8],
    run: BTreeMap<String, String>,
    config: &'a Config,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("summary types serialize");
    s.push('\n');
    s
}

/// Writes `trace.csv`, `summary.json` and `manifest.json` into `dir`.
pub fn write_artifacts(dir: &Path, cfg: &Config, rec: &RunRecord) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write_file(&dir.join("trace.csv"), &trace_csv(&rec.rows))?;
    write_file(&dir.join("summary.json"), &json(&rec.summary))?;
    let manifest = Manifest {
        schema: SCHEMA,
        artifact_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.run.seed,
        trace_columns: TRACE_COLUMNS,
        run: cfg.echo(),
        config: cfg,
    };
    write_file(&dir.join("manifest.json"), &json(&manifest))
}
