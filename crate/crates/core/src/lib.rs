//! Optimal transmit/withhold control for an energy harvesting sensor that
//! reports on a two-state (normal/alarm) process.
//!
//! The sensor is modelled as a finite discounted MDP over
//! `[z, zd, e, d0, d1]`, with one Age of Information counter per process
//! state. The crate builds the explicit transition kernel, solves it by
//! value iteration, evaluates policies exactly and by Monte Carlo, and runs
//! parameter sweeps and policy slices from TOML configuration files.

pub mod harness;
pub mod kernel;
pub mod model;
pub mod simulator;
pub mod solver;

pub use kernel::{build_kernel, disturbance_distribution, Transition, TransitionKernel};
pub use model::{
    admissible_actions, enumerate_states, next_state, reachable_states, stage_cost, Action,
    Disturbance, ModelError, ModelParams, StateSpace, SystemState,
};
pub use simulator::{Simulator, Trajectory, ValueEstimate};
pub use solver::{
    bellman_backup, evaluate_policy, value_iteration, Policy, Solution, SolveError, SolveReport,
    ValueFunction, ValueIteration,
};
