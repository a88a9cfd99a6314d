use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfw_cli::config::Config;
use qfw_cli::run::{execute, write_artifacts};
use qfw_cli::sweep::{run_sweep, sweep_exit_code};
use qfw_cli::verify::{run_verify, VerifyOptions};
use qfw_cli::{CliError, FAULT_SIGMA_SCALE};

#[derive(Parser)]
#[command(name = "qfw", version, about = "Frank-Wolfe runs with emulated quantum oracles")]
struct Cli {
    /// Overrides the run seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (takes precedence over OUTPUT_DIR and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Loosens every oracle's step schedule so slack checks must fail.
    #[arg(long, global = true, hide = true)]
    inject_fault: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write trace.csv, summary.json, manifest.json.
    Run { config: PathBuf },
    /// Execute every cell of the config's [sweep] grid.
    Sweep { config: PathBuf },
    /// Run the built-in invariant suite.
    Verify {
        /// Only checks whose suite or name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<Config, CliError> {
    let mut cfg = Config::load(path)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scale = if cli.inject_fault { FAULT_SIGMA_SCALE } else { 1.0 };
    let result = match &cli.command {
        Command::Run { config } => load(config, cli.seed).and_then(|cfg| {
            let rec = execute(&cfg, scale)?;
            let dir = cfg.output_dir(cli.out.as_deref());
            write_artifacts(&dir, &cfg, &rec)?;
            let s = &rec.summary;
            println!(
                "{} on {:?} d={}: {} rounds, f - f* = {:.3e} (tolerance {:.3e}), {}",
                s.variant,
                s.problem,
                s.d,
                s.iterations,
                s.final_error,
                s.tolerance,
                if s.success { "within tolerance" } else { "outside tolerance" }
            );
            println!("wrote {}", dir.display());
            Ok(0)
        }),
        Command::Sweep { config } => load(config, cli.seed).and_then(|cfg| {
            let dir = cfg.output_dir(cli.out.as_deref());
            let outcome = run_sweep(&cfg, &dir, scale)?;
            for row in &outcome.scaling {
                println!(
                    "{} eps={}: {} cells, success rate {:.3}, slopes fq={:.3} qq={:.3} time={:.3}",
                    row.variant,
                    row.epsilon,
                    row.cells,
                    row.success_rate,
                    row.slope_function_queries,
                    row.slope_quantum_queries,
                    row.slope_time_cost
                );
            }
            println!("wrote {}", dir.display());
            Ok(sweep_exit_code(&outcome))
        }),
        Command::Verify { filter } => {
            let opts = VerifyOptions { filter: filter.clone(), sigma_scale: scale };
            let report = run_verify(&opts);
            print!("{}", report.table());
            if report.rows.is_empty() {
                Err(CliError::Config("filter matched no checks".into()))
            } else if report.failures() > 0 {
                Err(CliError::Violation(report.failures()))
            } else {
                Ok(0)
            }
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qfw: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
