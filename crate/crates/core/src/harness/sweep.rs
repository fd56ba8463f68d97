use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::{render_csv, HarnessError};
use crate::kernel::build_kernel;
use crate::model::{ModelParams, StateSpace};
use crate::solver::{value_iteration, SolveReport};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: ModelParams,
    pub coordinates: Vec<f64>,
    pub j_star_s0: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub swept: Vec<&'static str>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        self.swept
            .iter()
            .map(|s| s.to_string())
            .chain(["j_star_s0", "iterations", "residual_bound"].map(String::from))
            .collect()
    }

    pub fn to_csv(&self) -> Result<String, HarnessError> {
        render_csv(
            &self.header(),
            self.rows.iter().map(|row| {
                row.coordinates
                    .iter()
                    .map(|c| c.to_string())
                    .chain([
                        row.j_star_s0.to_string(),
                        row.report.iterations.to_string(),
                        row.report.error_bound.to_string(),
                    ])
                    .collect::<Vec<_>>()
            }),
        )
    }

    /// First row whose coordinates equal `coordinates`.
    pub fn find(&self, coordinates: &[f64]) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.coordinates == coordinates)
    }
}

/// Solves every grid point and records `J*(s0)`. Points are solved in
/// parallel; rows come back in grid order.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepTable, HarnessError> {
    let rows = cfg
        .grid()
        .into_par_iter()
        .map(|point| -> Result<SweepRow, HarnessError> {
            let kernel = build_kernel(&point.params)?;
            let solution = value_iteration(&kernel, point.params.gamma, cfg.tol)?;
            let s0 = StateSpace::new(&point.params).encode(&cfg.start_state);
            Ok(SweepRow {
                params: point.params,
                coordinates: point.coordinates,
                j_star_s0: solution.values[s0],
                report: solution.report,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable {
        swept: cfg.swept_columns(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemState;

    #[test]
    fn singleton_grid_matches_direct_solve() {
        let cfg =
            ExperimentConfig::parse("e_max = 2\nd_max0 = 4\nd_max1 = 4\nsweep.pe = [0.6]").unwrap();
        let table = sweep(&cfg).unwrap();
        assert_eq!(table.rows.len(), 1);

        let p = ModelParams {
            pe: 0.6,
            ..cfg.params
        };
        let k = build_kernel(&p).unwrap();
        let direct = value_iteration(&k, p.gamma, cfg.tol).unwrap();
        let s0 = k.space().encode(&SystemState::initial());
        assert_eq!(table.rows[0].j_star_s0, direct.values[s0]);
        assert_eq!(table.rows[0].report, direct.report);
    }

    #[test]
    fn csv_header_names_swept_columns() {
        let cfg = ExperimentConfig::parse(
            "e_max = 1\nd_max0 = 2\nd_max1 = 2\nsweep.p01_p10 = [[0.9, 0.1]]\nsweep.ps = [0.5, 0.8]",
        )
        .unwrap();
        let csv = sweep(&cfg).unwrap().to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "ps,p01,p10,j_star_s0,iterations,residual_bound"
        );
        assert!(lines.next().unwrap().starts_with("0.5,0.9,0.1,"));
        assert_eq!(csv.lines().count(), 3);
    }
}
