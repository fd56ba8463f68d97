//! Experiment configuration, parameter sweeps, policy slices, the AoI trace
//! replayer and the command-line front end.

pub mod cli;
pub mod config;
pub mod grid;
pub mod sweep;
pub mod trace;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelError;
use crate::solver::SolveError;

pub use config::{ConfigError, ExperimentConfig, SimulationSettings, SweepAxis};
pub use grid::{policy_grid, PolicyGrid};
pub use sweep::{sweep, SweepRow, SweepTable};
pub use trace::{aoi_trace, EventLog, TraceError, TracePoint, UpdateEvent};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// 2 for solver non-convergence, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Solve(SolveError::NotConverged { .. }) => 2,
            _ => 1,
        }
    }
}

/// Renders records as comma-separated text with a header row.
pub(crate) fn render_csv<I, R>(header: &[String], rows: I) -> Result<String, HarnessError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| HarnessError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
