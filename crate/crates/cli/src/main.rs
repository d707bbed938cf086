use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use reach_cli::{cmd_run, cmd_simulate, cmd_validate, CliError};

/// Bounded ε-reach sets of linear hybrid automata.
#[derive(Parser)]
#[command(name = "reach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file's partition and invariants.
    Validate { model: PathBuf },
    /// Compute the reach set of a problem.
    Run {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cap on step attempts, accepted or not.
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Simulate the problem's single execution with RK4.
    Simulate {
        problem: PathBuf,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(e: CliError) -> ExitCode {
    error!("{e}");
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("REACH_LOG", "warn")).init();
    match Cli::parse().command {
        Command::Validate { model } => match cmd_validate(&model) {
            Ok(report) if report.is_valid() => {
                println!("{}: valid", model.display());
                ExitCode::SUCCESS
            }
            Ok(report) => {
                for v in &report.violations {
                    println!("{v}");
                }
                ExitCode::from(1)
            }
            Err(e) => fail(e),
        },
        Command::Run {
            problem,
            out,
            max_steps,
        } => match cmd_run(&problem, &out, max_steps) {
            Ok(o) => {
                let s = &o.summary;
                println!(
                    "{}: t_f = {}, jumps = {}, steps = {}, rho = {}",
                    s.termination, s.t_f, s.jump_count, s.steps, s.final_rho_sci
                );
                if let Some(f) = &s.last_failure {
                    eprintln!("last failure: {f}");
                }
                ExitCode::from(o.exit_code as u8)
            }
            Err(e) => fail(e),
        },
        Command::Simulate { problem, step, out } => match cmd_simulate(&problem, step, &out) {
            Ok(trace) => {
                println!(
                    "{} samples, {} events{}",
                    trace.samples.len(),
                    trace.events.len(),
                    if trace.zeno_suspected { " (Zeno suspected)" } else { "" }
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
