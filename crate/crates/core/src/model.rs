//! Domain types and one-step dynamics of the status-update MDP.
//!
//! A state is the 5-tuple `[z, zd, e, d0, d1]`: the current process state
//! (0 normal, 1 alarm), the process state last reported to the destination,
//! the stored energy units, and one Age of Information counter per process
//! state. Every slot the sensor either withholds or transmits a fresh update,
//! then three independent bits are revealed: transmission success, energy
//! arrival and the next process state.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::disturbance_distribution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} is out of range, expected {expected}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("state {0} is outside the state space")]
    InvalidState(SystemState),
    #[error("action {action} is not admissible in state {state}")]
    Inadmissible { state: SystemState, action: Action },
    #[error("disturbance {disturbance} cannot follow action {action} in state {state}")]
    InvalidDisturbance {
        state: SystemState,
        action: Action,
        disturbance: Disturbance,
    },
}

/// Exogenous probabilities, buffer and AoI caps, and the discount factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Probability of harvesting one energy unit in a slot.
    pub pe: f64,
    /// Probability that a transmission attempt succeeds.
    pub ps: f64,
    /// Normal to alarm transition probability.
    pub p01: f64,
    /// Alarm to normal transition probability.
    pub p10: f64,
    pub e_max: u32,
    pub d_max0: u32,
    pub d_max1: u32,
    pub gamma: f64,
}

impl Default for ModelParams {
    /// The reference setup: `P_z = [[0.9, 0.1], [0.2, 0.8]]`, `ps = pe = 0.8`,
    /// a 5-unit buffer, AoI caps of 10 and `gamma = 0.99`.
    fn default() -> Self {
        Self {
            pe: 0.8,
            ps: 0.8,
            p01: 0.1,
            p10: 0.2,
            e_max: 5,
            d_max0: 10,
            d_max1: 10,
            gamma: 0.99,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("pe", self.pe),
            ("ps", self.ps),
            ("p01", self.p01),
            ("p10", self.p10),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::InvalidParam {
                    name,
                    value,
                    expected: "a probability in [0, 1]",
                });
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ModelError::InvalidParam {
                name: "gamma",
                value: self.gamma,
                expected: "a discount factor in (0, 1)",
            });
        }
        for (name, value) in [
            ("e_max", self.e_max),
            ("d_max0", self.d_max0),
            ("d_max1", self.d_max1),
        ] {
            if value < 1 {
                return Err(ModelError::InvalidParam {
                    name,
                    value: value as f64,
                    expected: "an integer >= 1",
                });
            }
        }
        Ok(())
    }

    /// AoI cap for process state `z`.
    pub fn d_max(&self, z: u8) -> u32 {
        if z == 0 {
            self.d_max0
        } else {
            self.d_max1
        }
    }

    /// `P(Z_{k+1} = to | Z_k = from)`.
    pub fn process_transition(&self, from: u8, to: u8) -> f64 {
        match (from, to) {
            (0, 0) => 1.0 - self.p01,
            (0, _) => self.p01,
            (_, 0) => self.p10,
            _ => 1.0 - self.p10,
        }
    }

    /// Largest stage cost over the state space.
    pub fn g_max(&self) -> f64 {
        let d1 = self.d_max1 as f64;
        (self.d_max0 as f64).max(d1 * d1)
    }

    /// Upper bound on any discounted cost, `g_max / (1 - gamma)`.
    pub fn cost_bound(&self) -> f64 {
        self.g_max() / (1.0 - self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemState {
    /// Current process state.
    pub z: u8,
    /// Process state carried by the last delivered update.
    pub zd: u8,
    /// Stored energy units.
    pub e: u32,
    pub d0: u32,
    pub d1: u32,
}

impl SystemState {
    pub const fn new(z: u8, zd: u8, e: u32, d0: u32, d1: u32) -> Self {
        Self { z, zd, e, d0, d1 }
    }

    /// `[0, 0, 0, 1, 0]`: normal state known to the destination, empty buffer.
    pub const fn initial() -> Self {
        Self::new(0, 0, 0, 1, 0)
    }

    pub fn aoi(&self, z: u8) -> u32 {
        if z == 0 {
            self.d0
        } else {
            self.d1
        }
    }

    fn set_aoi(&mut self, z: u8, value: u32) {
        if z == 0 {
            self.d0 = value;
        } else {
            self.d1 = value;
        }
    }

    /// Field bounds for the given parameters.
    pub fn is_valid(&self, p: &ModelParams) -> bool {
        self.z <= 1
            && self.zd <= 1
            && self.e <= p.e_max
            && self.d0 <= p.d_max0
            && self.d1 <= p.d_max1
    }

    /// Structural invariant shared by every state reachable from
    /// [`SystemState::initial`].
    ///
    /// In sync (`z == zd`) the other counter is 0 and the active one is at
    /// least 1. Out of sync, the known state's counter is at least one more
    /// than the active state's counter, up to its cap.
    pub fn satisfies_reachable_invariant(&self, p: &ModelParams) -> bool {
        let other = 1 - self.z;
        if self.z == self.zd {
            self.aoi(other) == 0 && self.aoi(self.z) >= 1
        } else {
            let known = self.aoi(self.zd);
            known >= 1 && known >= (self.aoi(self.z) + 1).min(p.d_max(self.zd))
        }
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}, {}]",
            self.z, self.zd, self.e, self.d0, self.d1
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Withhold,
    Transmit,
}

impl Action {
    pub fn bit(self) -> u8 {
        match self {
            Action::Withhold => 0,
            Action::Transmit => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Action::Withhold
        } else {
            Action::Transmit
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

/// The three random bits revealed at the end of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Disturbance {
    /// The transmission in this slot succeeded.
    pub success: bool,
    /// An energy unit arrived.
    pub harvest: bool,
    /// Process state in the next slot.
    pub next_z: u8,
}

impl Disturbance {
    pub const fn new(success: bool, harvest: bool, next_z: u8) -> Self {
        Self {
            success,
            harvest,
            next_z,
        }
    }

    /// All eight outcomes in `(ws, we, wz)` lexicographic order.
    pub fn all() -> impl Iterator<Item = Disturbance> {
        (0u8..8).map(|bits| Disturbance::new(bits & 4 != 0, bits & 2 != 0, bits & 1))
    }
}

impl fmt::Display for Disturbance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.success as u8, self.harvest as u8, self.next_z
        )
    }
}

const WITHHOLD_ONLY: &[Action] = &[Action::Withhold];
const BOTH: &[Action] = &[Action::Withhold, Action::Transmit];

/// `{0}` on an empty buffer, `{0, 1}` otherwise.
pub fn admissible_actions(s: &SystemState) -> &'static [Action] {
    if s.e == 0 {
        WITHHOLD_ONLY
    } else {
        BOTH
    }
}

pub fn is_admissible(s: &SystemState, a: Action) -> bool {
    a == Action::Withhold || s.e >= 1
}

/// One-step transition `s_{k+1} = f(s_k, a_k, w_k)`.
///
/// AoI counters are updated from the next-slot quantities `z'` and `zd'`:
/// a counter whose state is neither active nor known is 0; the known state's
/// counter resets to 1 on a delivery and otherwise ages; the active but
/// unknown state's counter ages if the process stayed there and starts at 0
/// if it just switched. All ageing saturates at the cap.
pub fn next_state(
    s: &SystemState,
    a: Action,
    w: &Disturbance,
    p: &ModelParams,
) -> Result<SystemState, ModelError> {
    if !s.is_valid(p) || w.next_z > 1 {
        return Err(ModelError::InvalidState(*s));
    }
    if !is_admissible(s, a) {
        return Err(ModelError::Inadmissible {
            state: *s,
            action: a,
        });
    }
    if w.success && a == Action::Withhold {
        return Err(ModelError::InvalidDisturbance {
            state: *s,
            action: a,
            disturbance: *w,
        });
    }

    let z_next = w.next_z;
    let zd_next = if w.success { s.z } else { s.zd };
    let e_next = (s.e + w.harvest as u32 - a.bit() as u32).min(p.e_max);
    let mut next = SystemState::new(z_next, zd_next, e_next, 0, 0);

    for z in 0..=1u8 {
        let aged = (s.aoi(z) + 1).min(p.d_max(z));
        let value = if z == zd_next {
            if w.success {
                1
            } else {
                aged
            }
        } else if z == z_next && s.z == z {
            aged
        } else {
            0
        };
        next.set_aoi(z, value);
    }
    Ok(next)
}

/// `(1 - z) * d0 + z * d1^2`. The cost depends on the state only.
pub fn stage_cost(s: &SystemState) -> f64 {
    if s.z == 0 {
        s.d0 as f64
    } else {
        let d1 = s.d1 as f64;
        d1 * d1
    }
}

/// Mixed-radix indexing of every tuple in
/// `{0,1} x {0,1} x [0, e_max] x [0, d_max0] x [0, d_max1]`, with `d1` as
/// the fastest-varying digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    e_levels: usize,
    d0_levels: usize,
    d1_levels: usize,
}

impl StateSpace {
    pub fn new(p: &ModelParams) -> Self {
        Self {
            e_levels: p.e_max as usize + 1,
            d0_levels: p.d_max0 as usize + 1,
            d1_levels: p.d_max1 as usize + 1,
        }
    }

    pub fn len(&self) -> usize {
        4 * self.e_levels * self.d0_levels * self.d1_levels
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: &SystemState) -> bool {
        s.z <= 1
            && s.zd <= 1
            && (s.e as usize) < self.e_levels
            && (s.d0 as usize) < self.d0_levels
            && (s.d1 as usize) < self.d1_levels
    }

    /// Panics if `s` is outside the space.
    pub fn encode(&self, s: &SystemState) -> usize {
        assert!(self.contains(s), "state {s} outside the state space");
        let mut index = s.z as usize;
        index = index * 2 + s.zd as usize;
        index = index * self.e_levels + s.e as usize;
        index = index * self.d0_levels + s.d0 as usize;
        index * self.d1_levels + s.d1 as usize
    }

    /// Panics if `index >= self.len()`.
    pub fn decode(&self, index: usize) -> SystemState {
        assert!(index < self.len(), "state index {index} out of range");
        let mut rest = index;
        let d1 = rest % self.d1_levels;
        rest /= self.d1_levels;
        let d0 = rest % self.d0_levels;
        rest /= self.d0_levels;
        let e = rest % self.e_levels;
        rest /= self.e_levels;
        let zd = rest % 2;
        let z = rest / 2;
        SystemState::new(z as u8, zd as u8, e as u32, d0 as u32, d1 as u32)
    }

    pub fn iter(&self) -> impl Iterator<Item = SystemState> + '_ {
        (0..self.len()).map(move |i| self.decode(i))
    }
}

/// Every tuple of the finite state set, in index order.
pub fn enumerate_states(p: &ModelParams) -> (StateSpace, Vec<SystemState>) {
    let space = StateSpace::new(p);
    let states = space.iter().collect();
    (space, states)
}

/// Breadth-first closure of `s0` under every admissible action and every
/// disturbance with positive probability.
pub fn reachable_states(p: &ModelParams, s0: &SystemState) -> Result<BTreeSet<usize>, ModelError> {
    p.validate()?;
    if !s0.is_valid(p) {
        return Err(ModelError::InvalidState(*s0));
    }
    let space = StateSpace::new(p);
    let mut seen = vec![false; space.len()];
    let mut queue = VecDeque::new();
    let start = space.encode(s0);
    seen[start] = true;
    queue.push_back(*s0);

    while let Some(s) = queue.pop_front() {
        for &a in admissible_actions(&s) {
            for (w, _) in disturbance_distribution(&s, a, p)? {
                let next = next_state(&s, a, &w, p)?;
                let j = space.encode(&next);
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(seen
        .iter()
        .enumerate()
        .filter_map(|(i, &hit)| hit.then_some(i))
        .collect())
}
