//! Grid sweeps: the cross product of the `[sweep]` axes, one output
//! directory per cell, and aggregate `cells.csv` / `scaling.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qfw_core::cost_model::log_log_slope;
use qfw_core::par::{map_slice, Parallelism};

use crate::config::Config;
use crate::run::{execute, write_artifacts, RunRecord};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub label: String,
    pub config: Config,
}

/// Expands the grid. A missing `[sweep]` section, an empty axis or a
/// section with no axes is an empty grid.
pub fn expand(cfg: &Config) -> Result<Vec<Cell>, CliError> {
    let Some(s) = &cfg.sweep else {
        return Err(CliError::Config("sweep needs a [sweep] section".into()));
    };
    let variants: Vec<Option<String>> = axis(&s.variant);
    let ds: Vec<Option<usize>> = axis(&s.d);
    let ranks: Vec<Option<usize>> = axis(&s.rank);
    let epss: Vec<Option<f64>> = axis(&s.epsilon);
    let seeds: Vec<Option<u64>> = axis(&s.seed);
    let given = [&s.variant.is_some(), &s.d.is_some(), &s.rank.is_some(), &s.epsilon.is_some(), &s.seed.is_some()];
    let empty = [
        s.variant.as_ref().is_some_and(Vec::is_empty),
        s.d.as_ref().is_some_and(Vec::is_empty),
        s.rank.as_ref().is_some_and(Vec::is_empty),
        s.epsilon.as_ref().is_some_and(Vec::is_empty),
        s.seed.as_ref().is_some_and(Vec::is_empty),
    ];
    if given.iter().all(|g| !**g) || empty.iter().any(|e| *e) {
        return Err(CliError::Config("empty sweep grid".into()));
    }
    let mut cells = Vec::new();
    for v in &variants {
        for d in &ds {
            for r in &ranks {
                for e in &epss {
                    for sd in &seeds {
                        let mut c = cfg.clone();
                        c.sweep = None;
                        let mut label = format!("cell_{:04}", cells.len());
                        if let Some(v) = v {
                            c.run.variant = v.clone();
                            let _ = write!(label, "_{v}");
                        }
                        if let Some(d) = d {
                            c.problem.d = *d;
                            let _ = write!(label, "_d{d}");
                        }
                        if let Some(r) = r {
                            c.problem.rank = Some(*r);
                            let _ = write!(label, "_r{r}");
                        }
                        if let Some(e) = e {
                            c.run.epsilon = *e;
                            let _ = write!(label, "_eps{e}");
                        }
                        if let Some(sd) = sd {
                            c.run.seed = *sd;
                            let _ = write!(label, "_seed{sd}");
                        }
                        c.validate()?;
                        cells.push(Cell { index: cells.len(), label, config: c });
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn axis<T: Clone>(v: &Option<Vec<T>>) -> Vec<Option<T>> {
    match v {
        Some(xs) => xs.iter().cloned().map(Some).collect(),
        None => vec![None],
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub cells: Vec<(Cell, Result<RunRecord, CliError>)>,
    pub scaling: Vec<ScalingRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub variant: String,
    pub epsilon: f64,
    pub rank: Option<usize>,
    pub cells: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub slope_function_queries: f64,
    pub slope_quantum_queries: f64,
    pub slope_time_cost: f64,
}

fn slope_over_d(points: &BTreeMap<usize, Vec<f64>>) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .map(|(d, v)| (*d as f64, v.iter().sum::<f64>() / v.len() as f64))
        .filter(|(_, y)| *y > 0.0)
        .unzip();
    if xs.len() < 2 {
        f64::NAN
    } else {
        log_log_slope(&xs, &ys)
    }
}

/// Groups cells by (variant, epsilon, rank) and fits per-round cost against d.
pub fn scaling(cells: &[(Cell, Result<RunRecord, CliError>)]) -> Vec<ScalingRow> {
    type Key = (String, u64, Option<usize>);
    let mut groups: BTreeMap<Key, Vec<&(Cell, Result<RunRecord, CliError>)>> = BTreeMap::new();
    for c in cells {
        let cfg = &c.0.config;
        groups
            .entry((cfg.run.variant.clone(), cfg.run.epsilon.to_bits(), cfg.problem.rank))
            .or_default()
            .push(c);
    }
    groups
        .into_iter()
        .map(|((variant, eps_bits, rank), members)| {
            let mut fq: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut qq: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut tc: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut successes = 0;
            for (cell, res) in &members {
                if let Ok(rec) = res {
                    let d = cell.config.problem.d;
                    fq.entry(d).or_default().push(rec.summary.per_round.function_queries);
                    qq.entry(d).or_default().push(rec.summary.per_round.quantum_queries);
                    tc.entry(d).or_default().push(rec.summary.per_round.time_cost);
                    if rec.summary.success {
                        successes += 1;
                    }
                }
            }
            ScalingRow {
                variant,
                epsilon: f64::from_bits(eps_bits),
                rank,
                cells: members.len(),
                successes,
                success_rate: successes as f64 / members.len() as f64,
                slope_function_queries: slope_over_d(&fq),
                slope_quantum_queries: slope_over_d(&qq),
                slope_time_cost: slope_over_d(&tc),
            }
        })
        .collect()
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from(
        "variant,epsilon,rank,cells,successes,success_rate,slope_function_queries,slope_quantum_queries,slope_time_cost\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.variant,
            num(r.epsilon),
            r.rank.map_or(String::new(), |v| v.to_string()),
            r.cells,
            r.successes,
            num(r.success_rate),
            num(r.slope_function_queries),
            num(r.slope_quantum_queries),
            num(r.slope_time_cost),
        );
    }
    out
}

fn cells_csv(cells: &[(Cell, Result<RunRecord, CliError>)]) -> String {
    let mut out = String::from(
        "cell,variant,d,seed,epsilon,status,iterations,final_error,success,per_round_function_queries,per_round_quantum_queries,per_round_time_cost\n",
    );
    for (cell, res) in cells {
        let c = &cell.config;
        let _ = write!(out, "{},{},{},{},{},", cell.label, c.run.variant, c.problem.d, c.run.seed, num(c.run.epsilon));
        match res {
            Ok(r) => {
                let s = &r.summary;
                let _ = writeln!(
                    out,
                    "ok,{},{},{},{},{},{}",
                    s.iterations,
                    num(s.final_error),
                    s.success,
                    num(s.per_round.function_queries),
                    num(s.per_round.quantum_queries),
                    num(s.per_round.time_cost)
                );
            }
            Err(e) => {
                let _ = writeln!(out, "error_{},,,,,,", e.exit_code());
            }
        }
    }
    out
}

/// Runs every cell (in parallel when available), then writes the per-cell
/// artifacts and the aggregates in cell order.
pub fn run_sweep(cfg: &Config, out: &Path, sigma_scale: f64) -> Result<SweepOutcome, CliError> {
    let cells = expand(cfg)?;
    let results = map_slice(&cells, Parallelism::default(), |c| execute(&c.config, sigma_scale));
    let cells: Vec<_> = cells.into_iter().zip(results).collect();
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    for (cell, res) in &cells {
        if let Ok(rec) = res {
            write_artifacts(&out.join(&cell.label), &cell.config, rec)?;
        }
    }
    let scaling = scaling(&cells);
    let write = |name: &str, text: String| {
        std::fs::write(out.join(name), text).map_err(|e| CliError::Io(format!("{name}: {e}")))
    };
    write("cells.csv", cells_csv(&cells))?;
    write("scaling.csv", scaling_csv(&scaling))?;
    Ok(SweepOutcome { cells, scaling })
}

/// Exit status of a finished sweep: the worst cell error, or 0.
pub fn sweep_exit_code(outcome: &SweepOutcome) -> i32 {
    outcome.cells.iter().filter_map(|(_, r)| r.as_ref().err()).map(|e| e.exit_code()).max().unwrap_or(0)
}
