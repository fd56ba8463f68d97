//! Two-dimensional slices of a policy over `(e, Δ^z)`.
//!
//! The slice holds the destination in sync with the process (`zd = z`) and
//! the other state's AoI at 0, which are the only values those coordinates
//! take on reachable in-sync states. `Δ^z` runs from 1 to its cap.

use std::collections::BTreeSet;

use super::{render_csv, HarnessError};
use crate::kernel::{build_kernel, TransitionKernel};
use crate::model::{Action, ModelParams, SystemState};
use crate::solver::{value_iteration, Policy};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyGrid {
    pub z: u8,
    pub e_max: u32,
    pub d_max: u32,
    /// `actions[e][d - 1]`.
    pub actions: Vec<Vec<Action>>,
}

impl PolicyGrid {
    pub fn slice(kernel: &TransitionKernel, policy: &Policy, z: u8) -> Self {
        assert!(z <= 1, "process state must be 0 or 1");
        let p = kernel.params();
        let space = kernel.space();
        let d_max = p.d_max(z);
        let actions = (0..=p.e_max)
            .map(|e| {
                (1..=d_max)
                    .map(|d| {
                        let (d0, d1) = if z == 0 { (d, 0) } else { (0, d) };
                        policy[space.encode(&SystemState::new(z, z, e, d0, d1))]
                    })
                    .collect()
            })
            .collect();
        Self {
            z,
            e_max: p.e_max,
            d_max,
            actions,
        }
    }

    pub fn action(&self, e: u32, d: u32) -> Action {
        self.actions[e as usize][d as usize - 1]
    }

    fn cells_with(&self, target: Action) -> BTreeSet<(u32, u32)> {
        (0..=self.e_max)
            .flat_map(|e| (1..=self.d_max).map(move |d| (e, d)))
            .filter(|&(e, d)| self.action(e, d) == target)
            .collect()
    }

    /// `(e, Δ)` cells where the policy withholds.
    pub fn withhold_set(&self) -> BTreeSet<(u32, u32)> {
        self.cells_with(Action::Withhold)
    }

    /// Withhold cells on a non-empty buffer, i.e. deliberate reservation.
    pub fn reservation_set(&self) -> BTreeSet<(u32, u32)> {
        self.withhold_set()
            .into_iter()
            .filter(|&(e, _)| e >= 1)
            .collect()
    }

    /// Cells where the two grids disagree. Panics on mismatched shapes.
    pub fn differences(&self, other: &PolicyGrid) -> BTreeSet<(u32, u32)> {
        assert_eq!(
            (self.e_max, self.d_max),
            (other.e_max, other.d_max),
            "grid shapes differ"
        );
        (0..=self.e_max)
            .flat_map(|e| (1..=self.d_max).map(move |d| (e, d)))
            .filter(|&(e, d)| self.action(e, d) != other.action(e, d))
            .collect()
    }

    /// Matrix with one row per energy level and one column per AoI value,
    /// preceded by a `#` line describing the slice.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let other = 1 - self.z;
        let mut header = vec!["e".to_string()];
        header.extend((1..=self.d_max).map(|d| format!("d{}={}", self.z, d)));
        let body = render_csv(
            &header,
            self.actions.iter().enumerate().map(|(e, row)| {
                std::iter::once(e.to_string())
                    .chain(row.iter().map(|a| a.bit().to_string()))
                    .collect::<Vec<_>>()
            }),
        )?;
        Ok(format!(
            "# z={z} zd={z} d{other}=0; cells are actions (0 withhold, 1 transmit)\n{body}",
            z = self.z
        ))
    }
}

/// Solves `p` and slices the optimal policy at process state `z`.
pub fn policy_grid(p: &ModelParams, z: u8, tol: f64) -> Result<PolicyGrid, HarnessError> {
    let kernel = build_kernel(p)?;
    let solution = value_iteration(&kernel, p.gamma, tol)?;
    Ok(PolicyGrid::slice(&kernel, &solution.policy, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::default_epsilon;

    #[test]
    fn empty_buffer_column_withholds() {
        let p = ModelParams {
            e_max: 3,
            d_max0: 5,
            d_max1: 5,
            ..ModelParams::default()
        };
        for z in 0..=1 {
            let grid = policy_grid(&p, z, default_epsilon(p.gamma)).unwrap();
            assert_eq!(grid.actions.len(), 4);
            assert!(grid.actions.iter().all(|row| row.len() == 5));
            assert!((1..=5).all(|d| grid.action(0, d) == Action::Withhold));
        }
    }

    #[test]
    fn csv_layout() {
        let p = ModelParams {
            e_max: 1,
            d_max0: 3,
            d_max1: 2,
            ..ModelParams::default()
        };
        let grid = policy_grid(&p, 1, default_epsilon(p.gamma)).unwrap();
        let csv = grid.to_csv().unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "# z=1 zd=1 d0=0; cells are actions (0 withhold, 1 transmit)"
        );
        assert_eq!(lines[1], "e,d1=1,d1=2");
        assert!(lines[2].starts_with("0,0,0"));
        assert_eq!(lines.len(), 4);
    }
}
