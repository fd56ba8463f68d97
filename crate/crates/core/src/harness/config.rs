//! Experiment configuration files.
//!
//! Flat TOML with optional list-valued sweep keys:
//!
//! ```toml
//! ps = 0.8
//! e_max = 5
//! sweep.pe = [0.1, 0.2, 0.3]
//! sweep.e_max = [1, 2, 3, 5]
//! ```
//!
//! Every key is optional and falls back to the reference setup
//! (`ModelParams::default()`, start state `[0, 0, 0, 1, 0]`). Unknown keys
//! are rejected.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{ModelError, ModelParams, SystemState};
use crate::simulator::truncation_horizon;
use crate::solver::default_epsilon;

pub const MAX_SWEEP_AXES: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {message}")]
    Read { path: String, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {value} ({expected})")]
    InvalidValue {
        key: String,
        value: String,
        expected: String,
    },
    #[error("sweep axis `{0}` has no values")]
    EmptyAxis(String),
    #[error("at most {MAX_SWEEP_AXES} sweep axes are allowed, got {0}")]
    TooManyAxes(usize),
    #[error("sweep axes `{0}` and `{1}` both set the same parameter")]
    ConflictingAxes(String, String),
    #[error("`{0}` does not accept sweep axes")]
    SweepNotAllowed(&'static str),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    pe: Option<Vec<f64>>,
    ps: Option<Vec<f64>>,
    e_max: Option<Vec<u32>>,
    p01: Option<Vec<f64>>,
    p10: Option<Vec<f64>>,
    p01_p10: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    pe: Option<f64>,
    ps: Option<f64>,
    p01: Option<f64>,
    p10: Option<f64>,
    e_max: Option<u32>,
    d_max0: Option<u32>,
    d_max1: Option<u32>,
    gamma: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
    episodes: Option<usize>,
    horizon: Option<usize>,
    start_state: Option<[u32; 5]>,
    sweep: Option<RawSweep>,
}

/// One swept parameter and its grid values.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Pe(Vec<f64>),
    Ps(Vec<f64>),
    EMax(Vec<u32>),
    P01(Vec<f64>),
    P10(Vec<f64>),
    /// Joint `(p01, p10)` pairs.
    ProcessPair(Vec<(f64, f64)>),
}

impl SweepAxis {
    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::Pe(_) => "pe",
            SweepAxis::Ps(_) => "ps",
            SweepAxis::EMax(_) => "e_max",
            SweepAxis::P01(_) => "p01",
            SweepAxis::P10(_) => "p10",
            SweepAxis::ProcessPair(_) => "p01_p10",
        }
    }

    /// Output column names.
    pub fn columns(&self) -> Vec<&'static str> {
        match self {
            SweepAxis::ProcessPair(_) => vec!["p01", "p10"],
            other => vec![other.key()],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Pe(v) | SweepAxis::Ps(v) | SweepAxis::P01(v) | SweepAxis::P10(v) => v.len(),
            SweepAxis::EMax(v) => v.len(),
            SweepAxis::ProcessPair(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sets point `index` of this axis on `params`, returning the column
    /// values.
    pub fn apply(&self, params: &mut ModelParams, index: usize) -> Vec<f64> {
        match self {
            SweepAxis::Pe(v) => {
                params.pe = v[index];
                vec![v[index]]
            }
            SweepAxis::Ps(v) => {
                params.ps = v[index];
                vec![v[index]]
            }
            SweepAxis::EMax(v) => {
                params.e_max = v[index];
                vec![v[index] as f64]
            }
            SweepAxis::P01(v) => {
                params.p01 = v[index];
                vec![v[index]]
            }
            SweepAxis::P10(v) => {
                params.p10 = v[index];
                vec![v[index]]
            }
            SweepAxis::ProcessPair(v) => {
                let (p01, p10) = v[index];
                params.p01 = p01;
                params.p10 = p10;
                vec![p01, p10]
            }
        }
    }

    fn touches(&self) -> &'static [&'static str] {
        match self {
            SweepAxis::ProcessPair(_) => &["p01", "p10"],
            SweepAxis::Pe(_) => &["pe"],
            SweepAxis::Ps(_) => &["ps"],
            SweepAxis::EMax(_) => &["e_max"],
            SweepAxis::P01(_) => &["p01"],
            SweepAxis::P10(_) => &["p10"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSettings {
    pub episodes: usize,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    /// Outermost axis first.
    pub axes: Vec<SweepAxis>,
    /// Value iteration stopping threshold.
    pub tol: f64,
    pub simulation: SimulationSettings,
    pub start_state: SystemState,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = ModelParams::default();
        Self {
            params,
            axes: Vec::new(),
            tol: default_epsilon(params.gamma),
            simulation: SimulationSettings {
                episodes: 10_000,
                horizon: truncation_horizon(&params, 0.1),
                seed: 0,
            },
            start_state: SystemState::initial(),
        }
    }
}

fn invalid(
    key: impl Into<String>,
    value: impl ToString,
    expected: impl Into<String>,
) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.into(),
        value: value.to_string(),
        expected: expected.into(),
    }
}

fn param_error(prefix: &str, err: ModelError) -> ConfigError {
    match err {
        ModelError::InvalidParam {
            name,
            value,
            expected,
        } => invalid(format!("{prefix}{name}"), value, expected),
        other => ConfigError::Parse(other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let defaults = ModelParams::default();
        let params = ModelParams {
            pe: raw.pe.unwrap_or(defaults.pe),
            ps: raw.ps.unwrap_or(defaults.ps),
            p01: raw.p01.unwrap_or(defaults.p01),
            p10: raw.p10.unwrap_or(defaults.p10),
            e_max: raw.e_max.unwrap_or(defaults.e_max),
            d_max0: raw.d_max0.unwrap_or(defaults.d_max0),
            d_max1: raw.d_max1.unwrap_or(defaults.d_max1),
            gamma: raw.gamma.unwrap_or(defaults.gamma),
        };
        params.validate().map_err(|e| param_error("", e))?;

        let tol = raw.tol.unwrap_or_else(|| default_epsilon(params.gamma));
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(invalid("tol", tol, "a positive number"));
        }
        let episodes = raw.episodes.unwrap_or(10_000);
        if episodes < 2 {
            return Err(invalid("episodes", episodes, "at least 2"));
        }
        let horizon = raw
            .horizon
            .unwrap_or_else(|| truncation_horizon(&params, 0.1));
        if horizon < 1 {
            return Err(invalid("horizon", horizon, "at least 1"));
        }

        let axes = Self::axes(raw.sweep.unwrap_or_default())?;

        let start_state = match raw.start_state {
            Some([z, zd, e, d0, d1]) => {
                if z > 1 || zd > 1 {
                    return Err(invalid(
                        "start_state",
                        format!("{:?}", [z, zd, e, d0, d1]),
                        "process states must be 0 or 1",
                    ));
                }
                SystemState::new(z as u8, zd as u8, e, d0, d1)
            }
            None => SystemState::initial(),
        };

        let config = Self {
            params,
            axes,
            tol,
            simulation: SimulationSettings {
                episodes,
                horizon,
                seed: raw.seed.unwrap_or(0),
            },
            start_state,
        };
        for point in config.grid() {
            if !start_state.is_valid(&point.params) {
                return Err(invalid(
                    "start_state",
                    start_state,
                    format!(
                        "must fit e_max = {}, d_max0 = {}, d_max1 = {}",
                        point.params.e_max, point.params.d_max0, point.params.d_max1
                    ),
                ));
            }
        }
        Ok(config)
    }

    fn axes(raw: RawSweep) -> Result<Vec<SweepAxis>, ConfigError> {
        fn probabilities(key: &str, values: &[f64]) -> Result<(), ConfigError> {
            match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                Some(v) => Err(invalid(
                    format!("sweep.{key}"),
                    v,
                    "a probability in [0, 1]",
                )),
                None => Ok(()),
            }
        }

        let mut axes = Vec::new();
        if let Some(v) = raw.pe {
            probabilities("pe", &v)?;
            axes.push(SweepAxis::Pe(v));
        }
        if let Some(v) = raw.ps {
            probabilities("ps", &v)?;
            axes.push(SweepAxis::Ps(v));
        }
        if let Some(v) = raw.e_max {
            if let Some(bad) = v.iter().find(|&&e| e < 1) {
                return Err(invalid("sweep.e_max", bad, "an integer >= 1"));
            }
            axes.push(SweepAxis::EMax(v));
        }
        if let Some(v) = raw.p01 {
            probabilities("p01", &v)?;
            axes.push(SweepAxis::P01(v));
        }
        if let Some(v) = raw.p10 {
            probabilities("p10", &v)?;
            axes.push(SweepAxis::P10(v));
        }
        if let Some(v) = raw.p01_p10 {
            let flat: Vec<f64> = v.iter().flatten().copied().collect();
            probabilities("p01_p10", &flat)?;
            axes.push(SweepAxis::ProcessPair(
                v.into_iter().map(|[a, b]| (a, b)).collect(),
            ));
        }

        if let Some(axis) = axes.iter().find(|a| a.is_empty()) {
            return Err(ConfigError::EmptyAxis(format!("sweep.{}", axis.key())));
        }
        if axes.len() > MAX_SWEEP_AXES {
            return Err(ConfigError::TooManyAxes(axes.len()));
        }
        for (i, a) in axes.iter().enumerate() {
            for b in &axes[i + 1..] {
                if a.touches().iter().any(|k| b.touches().contains(k)) {
                    return Err(ConfigError::ConflictingAxes(
                        format!("sweep.{}", a.key()),
                        format!("sweep.{}", b.key()),
                    ));
                }
            }
        }
        Ok(axes)
    }

    /// Fails if any sweep axis is present.
    pub fn require_single_point(&self, command: &'static str) -> Result<(), ConfigError> {
        if self.axes.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::SweepNotAllowed(command))
        }
    }

    /// Column names of the swept parameters.
    pub fn swept_columns(&self) -> Vec<&'static str> {
        self.axes.iter().flat_map(|a| a.columns()).collect()
    }

    /// All grid points, outermost axis varying slowest. A config without
    /// axes yields one point.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = vec![GridPoint {
            params: self.params,
            coordinates: Vec::new(),
        }];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|point| {
                    (0..axis.len()).map(move |i| {
                        let mut next = point.clone();
                        let values = axis.apply(&mut next.params, i);
                        next.coordinates.extend(values);
                        next
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub params: ModelParams,
    /// Values of the swept columns, in [`ExperimentConfig::swept_columns`]
    /// order.
    pub coordinates: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_reference_setup() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.grid().len(), 1);
    }

    #[test]
    fn parses_two_axes_in_order() {
        let cfg =
            ExperimentConfig::parse("ps = 0.7\nsweep.pe = [0.1, 0.2, 0.3]\nsweep.e_max = [1, 2]\n")
                .unwrap();
        assert_eq!(cfg.swept_columns(), vec!["pe", "e_max"]);
        let grid = cfg.grid();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0].coordinates, vec![0.1, 1.0]);
        assert_eq!(grid[1].coordinates, vec![0.1, 2.0]);
        assert_eq!(grid[5].params.pe, 0.3);
        assert_eq!(grid[5].params.e_max, 2);
        assert!(grid.iter().all(|g| g.params.ps == 0.7));
    }

    #[test]
    fn pair_axis_sets_both_probabilities() {
        let cfg = ExperimentConfig::parse("sweep.p01_p10 = [[0.9, 0.1], [0.3, 0.4]]").unwrap();
        assert_eq!(cfg.swept_columns(), vec!["p01", "p10"]);
        let grid = cfg.grid();
        assert_eq!(grid[1].params.p01, 0.3);
        assert_eq!(grid[1].params.p10, 0.4);
    }

    fn error_for(text: &str) -> String {
        ExperimentConfig::parse(text).unwrap_err().to_string()
    }

    #[test]
    fn rejections_name_the_key() {
        assert!(error_for("ps = 1.3").contains("`ps`"));
        assert!(error_for("sweep.pe = [0.5, 1.3]").contains("`sweep.pe`"));
        assert!(error_for("gamma = 1.0").contains("`gamma`"));
        assert!(error_for("tol = -1.0").contains("`tol`"));
        assert!(error_for("episodes = 1").contains("`episodes`"));
        assert!(error_for("bogus = 3").contains("bogus"));
        assert!(error_for("sweep.d_max0 = [3]").contains("d_max0"));
        assert!(error_for("sweep.e_max = [0, 1]").contains("`sweep.e_max`"));
        assert!(error_for("start_state = [0, 0, 9, 1, 0]").contains("`start_state`"));
        assert!(error_for("start_state = [2, 0, 0, 1, 0]").contains("`start_state`"));
    }

    #[test]
    fn start_state_checked_against_swept_buffer() {
        let err = error_for("start_state = [0, 0, 3, 1, 0]\nsweep.e_max = [1, 5]");
        assert!(err.contains("start_state"), "{err}");
    }

    #[test]
    fn axis_limits() {
        assert!(matches!(
            ExperimentConfig::parse("sweep.pe = [0.1]\nsweep.ps = [0.1]\nsweep.p01 = [0.1]"),
            Err(ConfigError::TooManyAxes(3))
        ));
        assert!(matches!(
            ExperimentConfig::parse("sweep.p01 = [0.1]\nsweep.p01_p10 = [[0.1, 0.2]]"),
            Err(ConfigError::ConflictingAxes(..))
        ));
        assert!(matches!(
            ExperimentConfig::parse("sweep.pe = []"),
            Err(ConfigError::EmptyAxis(_))
        ));
    }
}
