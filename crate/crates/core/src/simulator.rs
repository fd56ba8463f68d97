//! Seeded Monte Carlo rollouts through the model dynamics.
//!
//! Each episode draws from its own ChaCha8 stream: the generator is seeded
//! with the run seed and episode `n` uses stream `n`. A single
//! [`Simulator::rollout`] with seed `s` therefore replays episode 0 of
//! [`Simulator::estimate_value`] with the same seed.
//!
//! Per slot three uniforms are drawn in the fixed order `(ws, we, wz)`,
//! whether or not the action makes a success possible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{
    is_admissible, next_state, stage_cost, Action, Disturbance, ModelError, ModelParams,
    StateSpace, SystemState,
};
use crate::solver::Policy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub slot: usize,
    pub state: SystemState,
    pub action: Action,
    pub disturbance: Disturbance,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: SystemState,
    pub seed: u64,
    pub steps: Vec<Step>,
    /// State after the last recorded step.
    pub terminal: SystemState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: usize,
    pub horizon: usize,
}

/// RNG for episode `episode` of a run seeded with `seed`.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// Smallest horizon `H` with `gamma^H * g_max / (1 - gamma) <= bias`.
pub fn truncation_horizon(p: &ModelParams, bias: f64) -> usize {
    let bound = p.cost_bound();
    if bound <= bias {
        return 1;
    }
    ((bias / bound).ln() / p.gamma.ln()).ceil().max(1.0) as usize
}

pub struct Simulator<'a> {
    params: &'a ModelParams,
    space: StateSpace,
}

impl<'a> Simulator<'a> {
    pub fn new(params: &'a ModelParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self {
            params,
            space: StateSpace::new(params),
        })
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    /// Draws `(ws, we, wz)` for one slot.
    pub fn sample_disturbance<R: Rng>(
        &self,
        s: &SystemState,
        a: Action,
        rng: &mut R,
    ) -> Disturbance {
        let p = self.params;
        let (u_s, u_e, u_z): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let p_success = if a == Action::Transmit && s.e >= 1 {
            p.ps
        } else {
            0.0
        };
        Disturbance {
            success: u_s < p_success,
            harvest: u_e < p.pe,
            next_z: (u_z < p.process_transition(s.z, 1)) as u8,
        }
    }

    /// Samples a disturbance and applies it.
    pub fn step<R: Rng>(
        &self,
        s: &SystemState,
        a: Action,
        rng: &mut R,
    ) -> Result<(Disturbance, SystemState), ModelError> {
        let w = self.sample_disturbance(s, a, rng);
        Ok((w, next_state(s, a, &w, self.params)?))
    }

    fn action(&self, policy: &Policy, s: &SystemState) -> Result<Action, ModelError> {
        let a = policy[self.space.encode(s)];
        if is_admissible(s, a) {
            Ok(a)
        } else {
            Err(ModelError::Inadmissible {
                state: *s,
                action: a,
            })
        }
    }

    fn check_start(&self, policy: &Policy, s0: &SystemState) -> Result<(), ModelError> {
        assert_eq!(policy.len(), self.space.len(), "policy length");
        if s0.is_valid(self.params) {
            Ok(())
        } else {
            Err(ModelError::InvalidState(*s0))
        }
    }

    fn discounted_return(
        &self,
        policy: &Policy,
        s0: &SystemState,
        horizon: usize,
        rng: &mut ChaCha8Rng,
        mut record: impl FnMut(Step),
    ) -> Result<(f64, SystemState), ModelError> {
        let gamma = self.params.gamma;
        let mut state = *s0;
        let mut discount = 1.0;
        let mut total = 0.0;
        for slot in 0..horizon {
            let action = self.action(policy, &state)?;
            let cost = stage_cost(&state);
            total += discount * cost;
            discount *= gamma;
            let (disturbance, next) = self.step(&state, action, rng)?;
            record(Step {
                slot,
                state,
                action,
                disturbance,
                cost,
            });
            state = next;
        }
        Ok((total, state))
    }

    /// `sum_{k < horizon} gamma^k g(s_k)` along one sampled path, with the
    /// full trajectory.
    pub fn rollout(
        &self,
        policy: &Policy,
        s0: &SystemState,
        horizon: usize,
        seed: u64,
    ) -> Result<(f64, Trajectory), ModelError> {
        self.check_start(policy, s0)?;
        let mut rng = episode_rng(seed, 0);
        let mut steps = Vec::with_capacity(horizon);
        let (total, terminal) =
            self.discounted_return(policy, s0, horizon, &mut rng, |step| steps.push(step))?;
        Ok((
            total,
            Trajectory {
                initial: *s0,
                seed,
                steps,
                terminal,
            },
        ))
    }

    /// Mean and standard error of the discounted return over independent
    /// episodes. Episodes run in parallel; results are combined in episode
    /// order so the estimate is identical for any thread count.
    pub fn estimate_value(
        &self,
        policy: &Policy,
        s0: &SystemState,
        episodes: usize,
        horizon: usize,
        seed: u64,
    ) -> Result<ValueEstimate, ModelError> {
        assert!(
            episodes >= 2,
            "need at least two episodes for a standard error"
        );
        self.check_start(policy, s0)?;
        let returns = (0..episodes as u64)
            .into_par_iter()
            .map(|episode| {
                let mut rng = episode_rng(seed, episode);
                self.discounted_return(policy, s0, horizon, &mut rng, |_| {})
                    .map(|(total, _)| total)
            })
            .collect::<Result<Vec<f64>, _>>()?;

        // Welford
        let (mut mean, mut m2) = (0.0, 0.0);
        for (n, x) in returns.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (n + 1) as f64;
            m2 += delta * (x - mean);
        }
        let variance = m2 / (episodes - 1) as f64;
        Ok(ValueEstimate {
            mean,
            std_error: (variance / episodes as f64).sqrt(),
            episodes,
            horizon,
        })
    }
}
