use std::path::PathBuf;
use std::process::ExitCode;

use chenflow_core::runner::checks::{run_suites, Suite};
use chenflow_core::runner::eoc::eoc_sweep;
use chenflow_core::runner::rescale::{rescale_dir, write_rescaled};
use chenflow_core::runner::{run_config_in, RunConfig};
use chenflow_core::{ChenError, StopReason};
use clap::{Parser, Subcommand};
use serde_json::json;

const EXIT_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

/// Simulator for Chen's flow of curves.
#[derive(Parser)]
#[command(name = "chenflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// Convergence table against the exact test solution.
    Eoc {
        /// Doubling sequence of vertex counts.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        n: Vec<usize>,
        /// Also write eoc.csv and eoc.json here.
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check predictions of the analysis against simulations.
    TheoryCheck {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        json: bool,
    },
    /// Rescale a shrinking run about its final point.
    Rescale { dir: PathBuf },
}

fn error_json(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
}

fn fail(e: &ChenError) -> ExitCode {
    error_json(e.kind(), &e.to_string());
    ExitCode::from(if e.is_solver_failure() { EXIT_SOLVER } else { EXIT_USAGE })
}

fn run(config: PathBuf, output_dir: Option<PathBuf>) -> Result<ExitCode, ChenError> {
    let config = RunConfig::load(&config)?;
    let dir = output_dir.unwrap_or_else(|| config.output_dir.clone());
    let art = run_config_in(&config, &dir)?;
    println!("{}", serde_json::to_string_pretty(&art.summary)?);
    if art.summary.stop == StopReason::SolverFailure {
        error_json(
            "solver_failure",
            art.summary.failure.as_deref().unwrap_or("solver failure"),
        );
        return Ok(ExitCode::from(EXIT_SOLVER));
    }
    Ok(ExitCode::SUCCESS)
}

fn eoc(n: Vec<usize>, output_dir: Option<PathBuf>, as_json: bool) -> Result<ExitCode, ChenError> {
    let table = eoc_sweep(&n)?;
    if let Some(dir) = output_dir {
        table.write(&dir)?;
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&table)?);
    } else {
        print!("{}", table.render());
    }
    if let Some(f) = &table.failure {
        error_json("solver_failure", f);
        return Ok(ExitCode::from(EXIT_SOLVER));
    }
    Ok(ExitCode::SUCCESS)
}

fn theory_check(suite: &str, as_json: bool) -> Result<ExitCode, ChenError> {
    let reports = run_suites(&Suite::from_name(suite)?)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            print!("{r}");
        }
    }
    Ok(if reports.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    })
}

fn rescale(dir: PathBuf) -> Result<ExitCode, ChenError> {
    let result = rescale_dir(&dir)?;
    write_rescaled(&dir, &result)?;
    let last = result.frames.last();
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "extinction_time": result.extinction_time,
            "final_point": result.final_point,
            "omega": result.omega,
            "frames": result.frames.len(),
            "last_oscillation": last.map(|f| f.oscillation),
            "last_iso_ratio": last.and_then(|f| f.iso_ratio),
            "last_lemniscate_distance": last.and_then(|f| f.lemniscate_distance),
            "output": dir.join("rescaled"),
        }))?
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            error_json("usage", e.to_string().trim());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Run { config, output_dir } => run(config, output_dir),
        Command::Eoc { n, output_dir, json } => eoc(n, output_dir, json),
        Command::TheoryCheck { suite, json } => theory_check(&suite, json),
        Command::Rescale { dir } => rescale(dir),
    };
    result.unwrap_or_else(|e| fail(&e))
}
