//! Value iteration on a [`TransitionKernel`] and exact policy evaluation.
//!
//! The Bellman operator
//!
//! ```text
//! (TJ)(i) = g(i) + gamma * min_{a in A(i)} sum_j p_ij(a) J(j)
//! ```
//!
//! is a `gamma`-contraction in the sup-norm. The stage cost is pulled out of
//! the minimum because it does not depend on the action. Iterating from
//! `J = 0` until successive iterates differ by less than `epsilon` gives
//! `||J - J*|| <= gamma / (1 - gamma) * epsilon`.

use std::ops::Index;

use thiserror::Error;

use crate::kernel::TransitionKernel;
use crate::model::{is_admissible, Action};

pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(
        "value iteration did not converge within {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid solver setting `{name}` = {value}")]
    InvalidSetting { name: &'static str, value: f64 },
    #[error("policy assigns {action} to state {state}, where it is not admissible")]
    InadmissiblePolicy { state: usize, action: Action },
    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Discounted cost per state index.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(Vec<f64>);

impl ValueFunction {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `||self - other||_inf`.
    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        sup_distance(&self.0, &other.0)
    }
}

impl From<Vec<f64>> for ValueFunction {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl Index<usize> for ValueFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Stationary deterministic policy, one action per state index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy(Vec<Action>);

impl Policy {
    pub fn as_slice(&self) -> &[Action] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Transmit whenever the buffer is non-empty.
    pub fn greedy_transmit(kernel: &TransitionKernel) -> Self {
        let space = kernel.space();
        Self(
            (0..kernel.num_states())
                .map(|i| {
                    if space.decode(i).e >= 1 {
                        Action::Transmit
                    } else {
                        Action::Withhold
                    }
                })
                .collect(),
        )
    }

    /// Checks length and admissibility against `kernel`.
    pub fn check(&self, kernel: &TransitionKernel) -> Result<(), SolveError> {
        if self.0.len() != kernel.num_states() {
            return Err(SolveError::LengthMismatch {
                expected: kernel.num_states(),
                got: self.0.len(),
            });
        }
        let space = kernel.space();
        for (i, &a) in self.0.iter().enumerate() {
            if !is_admissible(&space.decode(i), a) {
                return Err(SolveError::InadmissiblePolicy {
                    state: i,
                    action: a,
                });
            }
        }
        Ok(())
    }
}

impl From<Vec<Action>> for Policy {
    fn from(actions: Vec<Action>) -> Self {
        Self(actions)
    }
}

impl Index<usize> for Policy {
    type Output = Action;

    fn index(&self, i: usize) -> &Action {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||J_{m+1} - J_m||_inf` at the last sweep.
    pub residual: f64,
    /// A-posteriori bound on `||J - J*||_inf`.
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: ValueFunction,
    pub policy: Policy,
    pub report: SolveReport,
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn expected_next(row: &[crate::kernel::Transition], values: &[f64]) -> f64 {
    row.iter().map(|t| t.prob * values[t.next]).sum()
}

/// One synchronous sweep of `T` writing into `out` and `actions`.
/// Ties go to [`Action::Withhold`].
fn backup_into(
    values: &[f64],
    kernel: &TransitionKernel,
    gamma: f64,
    out: &mut [f64],
    actions: &mut [Action],
) {
    let costs = kernel.costs();
    for i in 0..values.len() {
        let withhold = kernel
            .row(i, Action::Withhold)
            .map(|row| expected_next(row, values))
            .expect("withholding is always admissible");
        let (action, future) = match kernel.row(i, Action::Transmit) {
            Some(row) => {
                let transmit = expected_next(row, values);
                if transmit < withhold {
                    (Action::Transmit, transmit)
                } else {
                    (Action::Withhold, withhold)
                }
            }
            None => (Action::Withhold, withhold),
        };
        out[i] = costs[i] + gamma * future;
        actions[i] = action;
    }
}

/// `(TJ, greedy policy)`.
pub fn bellman_backup(
    values: &ValueFunction,
    kernel: &TransitionKernel,
    gamma: f64,
) -> (ValueFunction, Policy) {
    assert_eq!(values.len(), kernel.num_states(), "value function length");
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut actions = vec![Action::Withhold; n];
    backup_into(values.as_slice(), kernel, gamma, &mut out, &mut actions);
    (ValueFunction(out), Policy(actions))
}

/// Stopping threshold that guarantees `||J - J*|| <= target_error`.
pub fn epsilon_for_error(gamma: f64, target_error: f64) -> f64 {
    target_error * (1.0 - gamma) / gamma
}

/// Default stopping threshold, bounding the final error by `1e-4`.
pub fn default_epsilon(gamma: f64) -> f64 {
    epsilon_for_error(gamma, 1e-4)
}

/// Value iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueIteration {
    pub gamma: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl ValueIteration {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            epsilon: default_epsilon(gamma),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    /// Synchronous backups from `J = 0` until `||J_{m+1} - J_m|| < epsilon`.
    ///
    /// The returned policy is greedy with respect to the returned values.
    pub fn solve(&self, kernel: &TransitionKernel) -> Result<Solution, SolveError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(SolveError::InvalidSetting {
                name: "gamma",
                value: self.gamma,
            });
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(SolveError::InvalidSetting {
                name: "epsilon",
                value: self.epsilon,
            });
        }
        let n = kernel.num_states();
        let mut current = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut actions = vec![Action::Withhold; n];
        let mut residual = f64::INFINITY;

        for iteration in 1..=self.max_iterations {
            backup_into(&current, kernel, self.gamma, &mut next, &mut actions);
            residual = sup_distance(&current, &next);
            std::mem::swap(&mut current, &mut next);
            if residual < self.epsilon {
                // Greedy policy for the returned iterate.
                backup_into(&current, kernel, self.gamma, &mut next, &mut actions);
                return Ok(Solution {
                    values: ValueFunction(current),
                    policy: Policy(actions),
                    report: SolveReport {
                        iterations: iteration,
                        residual,
                        error_bound: self.gamma / (1.0 - self.gamma) * residual,
                    },
                });
            }
        }
        Err(SolveError::NotConverged {
            iterations: self.max_iterations,
            residual,
        })
    }
}

/// Value iteration with the default iteration cap.
pub fn value_iteration(
    kernel: &TransitionKernel,
    gamma: f64,
    epsilon: f64,
) -> Result<Solution, SolveError> {
    ValueIteration::new(gamma)
        .with_epsilon(epsilon)
        .solve(kernel)
}

const EVAL_RESIDUAL: f64 = 1e-10;
const EVAL_MAX_SWEEPS: usize = 10_000_000;

/// Solves `J = g + gamma * P_mu J` by fixed-point iteration.
///
/// Iterates past a residual of `1e-10` for as long as the residual keeps
/// shrinking, so the result sits at the floating-point floor.
pub fn evaluate_policy(
    policy: &Policy,
    kernel: &TransitionKernel,
    gamma: f64,
) -> Result<ValueFunction, SolveError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SolveError::InvalidSetting {
            name: "gamma",
            value: gamma,
        });
    }
    policy.check(kernel)?;
    let rows: Vec<_> = (0..kernel.num_states())
        .map(|i| kernel.row(i, policy[i]).expect("admissibility checked"))
        .collect();
    let costs = kernel.costs();
    let n = rows.len();
    let mut current = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut best = f64::INFINITY;

    for _ in 0..EVAL_MAX_SWEEPS {
        for i in 0..n {
            next[i] = costs[i] + gamma * expected_next(rows[i], &current);
        }
        let residual = sup_distance(&current, &next);
        std::mem::swap(&mut current, &mut next);
        if residual == 0.0 || (best <= EVAL_RESIDUAL && residual >= best) {
            break;
        }
        best = best.min(residual);
    }
    Ok(ValueFunction(current))
}
