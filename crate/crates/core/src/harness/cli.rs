use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::ExperimentConfig;
use super::grid::PolicyGrid;
use super::sweep::sweep;
use super::trace::{aoi_trace, trace_to_csv, EventLog};
use super::{render_csv, HarnessError};
use crate::kernel::build_kernel;
use crate::simulator::Simulator;
use crate::solver::value_iteration;

#[derive(Debug, Parser)]
#[command(
    name = "eh-aoi",
    version,
    about = "Optimal status updates for energy harvesting sensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one configuration and write the per-state values and policy.
    Solve {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the optimal policy's cost from the start state.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve every grid point of the configured sweep axes.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Optimal actions over (energy, AoI) with the destination in sync.
    PolicyGrid {
        #[arg(short, long)]
        config: PathBuf,
        /// Process state of the slice.
        #[arg(short, long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        z: u8,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Replay an event log and emit the per-slot AoI pair.
    Trace {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| HarnessError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(config: &Path, out: Option<&Path>) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::from_path(config)?;
    cfg.require_single_point("solve")?;
    let kernel = build_kernel(&cfg.params)?;
    let solution = value_iteration(&kernel, cfg.params.gamma, cfg.tol)?;
    let space = kernel.space();
    let s0 = space.encode(&cfg.start_state);
    println!("J*(s0) = {}", solution.values[s0]);
    println!("s0 = {}", cfg.start_state);
    println!("iterations = {}", solution.report.iterations);
    println!("residual = {:e}", solution.report.residual);
    println!("error_bound = {:e}", solution.report.error_bound);

    if let Some(out) = out {
        let header = ["index", "z", "zd", "e", "d0", "d1", "value", "action"].map(String::from);
        let table = render_csv(
            &header,
            (0..kernel.num_states()).map(|i| {
                let s = space.decode(i);
                vec![
                    i.to_string(),
                    s.z.to_string(),
                    s.zd.to_string(),
                    s.e.to_string(),
                    s.d0.to_string(),
                    s.d1.to_string(),
                    solution.values[i].to_string(),
                    solution.policy[i].bit().to_string(),
                ]
            }),
        )?;
        emit(Some(out), &table)?;
    }
    Ok(())
}

fn simulate(config: &Path, out: Option<&Path>) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::from_path(config)?;
    cfg.require_single_point("simulate")?;
    let kernel = build_kernel(&cfg.params)?;
    let solution = value_iteration(&kernel, cfg.params.gamma, cfg.tol)?;
    let sim = Simulator::new(&cfg.params)?;
    let settings = cfg.simulation;
    let estimate = sim.estimate_value(
        &solution.policy,
        &cfg.start_state,
        settings.episodes,
        settings.horizon,
        settings.seed,
    )?;
    let table = render_csv(
        &["estimate", "stderr", "episodes", "horizon"].map(String::from),
        [[
            estimate.mean.to_string(),
            estimate.std_error.to_string(),
            estimate.episodes.to_string(),
            estimate.horizon.to_string(),
        ]],
    )?;
    emit(out, &table)
}

fn run_sweep(config: &Path, out: Option<&Path>) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::from_path(config)?;
    emit(out, &sweep(&cfg)?.to_csv()?)
}

fn run_policy_grid(config: &Path, z: u8, out: Option<&Path>) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::from_path(config)?;
    cfg.require_single_point("policy-grid")?;
    let kernel = build_kernel(&cfg.params)?;
    let solution = value_iteration(&kernel, cfg.params.gamma, cfg.tol)?;
    emit(
        out,
        &PolicyGrid::slice(&kernel, &solution.policy, z).to_csv()?,
    )
}

fn run_trace(config: &Path, out: Option<&Path>) -> Result<(), HarnessError> {
    let log = EventLog::from_path(config)?;
    emit(out, &trace_to_csv(&aoi_trace(&log)?)?)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status: 0 on success, 1 for usage or configuration errors,
/// 2 when the solver does not converge.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Solve { config, out } => solve(config, out.as_deref()),
        Command::Simulate { config, out } => simulate(config, out.as_deref()),
        Command::Sweep { config, out } => run_sweep(config, out.as_deref()),
        Command::PolicyGrid { config, z, out } => run_policy_grid(config, *z, out.as_deref()),
        Command::Trace { config, out } => run_trace(config, out.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
