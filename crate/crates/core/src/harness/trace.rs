//! Literal AoI evaluation from an explicit event history.
//!
//! At slot `k` with `U_k` the generation time of the freshest delivered
//! update, `Z^d_k` the state it reported and `tau` the latest process change
//! at or before `k`:
//!
//! ```text
//! Δ^z_k = min(k - U_k, cap_z)   if z == Z^d_k
//!       = min(k - tau, cap_z)   if z != Z^d_k and z == Z_k
//!       = 0                     otherwise
//! ```
//!
//! This evaluates the definition directly and does not use the one-step
//! recursion in [`crate::model::next_state`], so the two can check each
//! other. Times are signed so a history may begin before slot 0; the trace
//! covers slots `0..=horizon`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{render_csv, HarnessError};
use crate::model::{Disturbance, ModelParams, SystemState};
use crate::simulator::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("cannot read `{path}`: {message}")]
    Read { path: String, message: String },
    #[error("malformed event log: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateEvent {
    pub generation: i64,
    pub delivery: i64,
    /// Process state carried by the update.
    pub state: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventLog {
    /// Process state before the first listed change.
    pub initial_state: u8,
    /// Slots at which the process switches state, strictly increasing.
    #[serde(default)]
    pub changes: Vec<i64>,
    /// Delivered updates, strictly increasing in both times.
    pub updates: Vec<UpdateEvent>,
    /// Last slot of the trace.
    pub horizon: i64,
    pub d_max0: u32,
    pub d_max1: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TracePoint {
    pub k: i64,
    pub d0: u32,
    pub d1: u32,
}

fn malformed(message: impl Into<String>) -> TraceError {
    TraceError::Malformed(message.into())
}

impl EventLog {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TraceError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let log: EventLog = toml::from_str(&text).map_err(|e| malformed(e.to_string()))?;
        log.validate()?;
        Ok(log)
    }

    /// Process state at slot `k`.
    pub fn process_state(&self, k: i64) -> u8 {
        let flips = self.changes.iter().filter(|&&t| t <= k).count();
        self.initial_state ^ (flips % 2) as u8
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.initial_state > 1 {
            return Err(malformed("initial_state must be 0 or 1"));
        }
        if self.d_max0 < 1 || self.d_max1 < 1 {
            return Err(malformed("AoI caps must be at least 1"));
        }
        if self.horizon < 0 {
            return Err(malformed("horizon must be non-negative"));
        }
        if self.changes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(malformed("change times must be strictly increasing"));
        }
        for u in &self.updates {
            if u.delivery < u.generation {
                return Err(malformed(format!(
                    "update generated at {} delivered earlier, at {}",
                    u.generation, u.delivery
                )));
            }
            if u.state != self.process_state(u.generation) {
                return Err(malformed(format!(
                    "update generated at {} reports state {} but the process was in state {}",
                    u.generation,
                    u.state,
                    self.process_state(u.generation)
                )));
            }
        }
        for w in self.updates.windows(2) {
            if w[0].generation >= w[1].generation || w[0].delivery >= w[1].delivery {
                return Err(malformed("update times must be strictly increasing"));
            }
        }
        if !self.updates.iter().any(|u| u.delivery <= 0) {
            return Err(malformed("no update delivered by slot 0"));
        }
        Ok(())
    }

    fn cap(&self, z: u8) -> u32 {
        if z == 0 {
            self.d_max0
        } else {
            self.d_max1
        }
    }

    /// A minimal history whose slot-0 evaluation reproduces the AoI of `s`.
    ///
    /// `s` must satisfy [`SystemState::satisfies_reachable_invariant`]; an
    /// AoI sitting at its cap is represented by an age of exactly the cap.
    pub fn for_state(s: &SystemState, p: &ModelParams) -> Result<Self, TraceError> {
        if !s.is_valid(p) || !s.satisfies_reachable_invariant(p) {
            return Err(malformed(format!("state {s} has no consistent history")));
        }
        let (changes, known_age) = if s.z == s.zd {
            (Vec::new(), s.aoi(s.z) as i64)
        } else {
            let active_age = s.aoi(s.z) as i64;
            let known_age = (s.aoi(s.zd) as i64).max(active_age + 1);
            (vec![-active_age], known_age)
        };
        Ok(Self {
            initial_state: s.zd,
            changes,
            updates: vec![UpdateEvent {
                generation: -known_age,
                delivery: -known_age + 1,
                state: s.zd,
            }],
            horizon: 0,
            d_max0: p.d_max0,
            d_max1: p.d_max1,
        })
    }

    /// Appends the events of slot `k` under instant acknowledgement: a
    /// successful transmission generated at `k` is delivered at `k + 1`,
    /// and a process switch takes effect at `k + 1`.
    pub fn record_slot(&mut self, k: i64, z: u8, w: &Disturbance) {
        if w.success {
            self.updates.push(UpdateEvent {
                generation: k,
                delivery: k + 1,
                state: z,
            });
        }
        if w.next_z != z {
            self.changes.push(k + 1);
        }
        self.horizon = self.horizon.max(k + 1);
    }

    /// Event history of a simulated trajectory, starting from its initial
    /// state at slot 0.
    pub fn from_trajectory(trajectory: &Trajectory, p: &ModelParams) -> Result<Self, TraceError> {
        let mut log = Self::for_state(&trajectory.initial, p)?;
        for step in &trajectory.steps {
            log.record_slot(step.slot as i64, step.state.z, &step.disturbance);
        }
        Ok(log)
    }
}

/// Per-slot `(Δ^0, Δ^1)` for `k = 0..=horizon`.
pub fn aoi_trace(log: &EventLog) -> Result<Vec<TracePoint>, TraceError> {
    log.validate()?;
    let mut points = Vec::with_capacity(log.horizon as usize + 1);
    for k in 0..=log.horizon {
        let last = log
            .updates
            .iter()
            .filter(|u| u.delivery <= k)
            .max_by_key(|u| u.delivery)
            .expect("validated: an update is delivered by slot 0");
        let known = last.state;
        let active = log.process_state(k);
        let last_change = log.changes.iter().copied().filter(|&t| t <= k).max();

        let aoi = |z: u8| -> u32 {
            let age = if z == known {
                k - last.generation
            } else if z == active {
                k - last_change.expect("active state differs from the reported one")
            } else {
                0
            };
            (age as u64).min(log.cap(z) as u64) as u32
        };
        points.push(TracePoint {
            k,
            d0: aoi(0),
            d1: aoi(1),
        });
    }
    Ok(points)
}

pub fn trace_to_csv(points: &[TracePoint]) -> Result<String, HarnessError> {
    render_csv(
        &["k", "d0", "d1"].map(String::from),
        points
            .iter()
            .map(|p| [p.k.to_string(), p.d0.to_string(), p.d1.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn illustration() -> EventLog {
        EventLog {
            initial_state: 0,
            changes: vec![5],
            updates: vec![
                UpdateEvent {
                    generation: 0,
                    delivery: 0,
                    state: 0,
                },
                UpdateEvent {
                    generation: 7,
                    delivery: 8,
                    state: 1,
                },
            ],
            horizon: 10,
            d_max0: 10,
            d_max1: 10,
        }
    }

    #[test]
    fn illustration_values() {
        let trace = aoi_trace(&illustration()).unwrap();
        assert_eq!((trace[6].d0, trace[6].d1), (6, 1));
        assert_eq!((trace[8].d0, trace[8].d1), (0, 1));
        // Before the change only the normal counter runs.
        assert!(trace[..5].iter().all(|p| p.d0 == p.k as u32 && p.d1 == 0));
        assert_eq!((trace[5].d0, trace[5].d1), (5, 0));
        assert_eq!((trace[10].d0, trace[10].d1), (0, 3));
    }

    #[test]
    fn no_changes_counts_up_to_cap() {
        let log = EventLog {
            changes: vec![],
            updates: vec![UpdateEvent {
                generation: 0,
                delivery: 0,
                state: 0,
            }],
            horizon: 15,
            ..illustration()
        };
        for p in aoi_trace(&log).unwrap() {
            assert_eq!(p.d0, (p.k as u32).min(10));
            assert_eq!(p.d1, 0);
        }
    }

    #[test]
    fn rejects_malformed_logs() {
        let mut log = illustration();
        log.updates[1].delivery = 6;
        assert!(aoi_trace(&log).is_err());

        let mut log = illustration();
        log.updates[1].state = 0;
        assert!(aoi_trace(&log).is_err());

        let mut log = illustration();
        log.changes = vec![5, 5];
        assert!(aoi_trace(&log).is_err());

        let mut log = illustration();
        log.updates.remove(0);
        assert!(aoi_trace(&log).is_err());
    }

    #[test]
    fn for_state_reproduces_the_state() {
        let p = ModelParams::default();
        for s in [
            SystemState::new(0, 0, 0, 1, 0),
            SystemState::new(1, 0, 2, 4, 2),
            SystemState::new(1, 0, 2, 10, 10),
            SystemState::new(0, 1, 0, 0, 7),
            SystemState::new(1, 1, 3, 0, 10),
        ] {
            let trace = aoi_trace(&EventLog::for_state(&s, &p).unwrap()).unwrap();
            assert_eq!((trace[0].d0, trace[0].d1), (s.d0, s.d1), "{s}");
        }
        assert!(EventLog::for_state(&SystemState::new(0, 0, 0, 0, 0), &p).is_err());
    }
}
