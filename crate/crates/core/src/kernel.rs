//! Explicit transition kernel `p_ij(a)` built by pushing the eight joint
//! disturbance outcomes of every `(state, action)` pair through the dynamics.

use crate::model::{
    admissible_actions, is_admissible, next_state, stage_cost, Action, Disturbance, ModelError,
    ModelParams, StateSpace, SystemState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub prob: f64,
}

/// Sparse row-per-`(state, action)` kernel with attached stage costs.
///
/// Rows are stored contiguously; row `2 * i + a` is empty when `a` is not
/// admissible in state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    params: ModelParams,
    space: StateSpace,
    costs: Vec<f64>,
    offsets: Vec<usize>,
    entries: Vec<Transition>,
}

impl TransitionKernel {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn num_states(&self) -> usize {
        self.costs.len()
    }

    /// Stage cost `g(i)` per state index.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// Outgoing transitions of state `i` under `a`, sorted by next-state
    /// index, or `None` if `a` is not admissible there.
    pub fn row(&self, i: usize, a: Action) -> Option<&[Transition]> {
        let r = 2 * i + a.bit() as usize;
        let (start, end) = (self.offsets[r], self.offsets[r + 1]);
        (start < end).then(|| &self.entries[start..end])
    }

    /// Total number of stored nonzeros.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Product distribution over `(ws, we, wz)` for one slot, zero-probability
/// outcomes omitted.
pub fn disturbance_distribution(
    s: &SystemState,
    a: Action,
    p: &ModelParams,
) -> Result<Vec<(Disturbance, f64)>, ModelError> {
    if s.z > 1 {
        return Err(ModelError::InvalidState(*s));
    }
    if !is_admissible(s, a) {
        return Err(ModelError::Inadmissible {
            state: *s,
            action: a,
        });
    }
    let p_success = if a == Action::Transmit { p.ps } else { 0.0 };
    let bit = |prob_one: f64, one: bool| if one { prob_one } else { 1.0 - prob_one };

    Ok(Disturbance::all()
        .filter_map(|w| {
            let prob = bit(p_success, w.success)
                * bit(p.pe, w.harvest)
                * p.process_transition(s.z, w.next_z);
            (prob > 0.0).then_some((w, prob))
        })
        .collect())
}

/// Outcomes landing on the same next state are merged and each row is
/// sorted by next-state index.
pub fn build_kernel(p: &ModelParams) -> Result<TransitionKernel, ModelError> {
    p.validate()?;
    let space = StateSpace::new(p);
    let n = space.len();
    let mut costs = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(2 * n + 1);
    let mut entries: Vec<Transition> = Vec::with_capacity(n * 8);
    offsets.push(0);

    let mut row: Vec<Transition> = Vec::with_capacity(8);
    for i in 0..n {
        let s = space.decode(i);
        costs.push(stage_cost(&s));
        for a in [Action::Withhold, Action::Transmit] {
            if admissible_actions(&s).contains(&a) {
                row.clear();
                for (w, prob) in disturbance_distribution(&s, a, p)? {
                    let next = space.encode(&next_state(&s, a, &w, p)?);
                    row.push(Transition { next, prob });
                }
                row.sort_by_key(|t| t.next);
                let row_start = entries.len();
                for t in &row {
                    if entries.len() > row_start && entries[entries.len() - 1].next == t.next {
                        entries.last_mut().unwrap().prob += t.prob;
                    } else {
                        entries.push(*t);
                    }
                }
            }
            offsets.push(entries.len());
        }
    }

    Ok(TransitionKernel {
        params: *p,
        space,
        costs,
        offsets,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_probability() {
        let p = ModelParams::default();
        let s = SystemState::new(0, 0, 2, 1, 0);
        let dist = disturbance_distribution(&s, Action::Transmit, &p).unwrap();
        let prob = dist
            .iter()
            .find(|(w, _)| *w == Disturbance::new(true, true, 0))
            .unwrap()
            .1;
        assert!((prob - 0.576).abs() < 1e-15);
        assert_eq!(dist.len(), 8);
    }

    #[test]
    fn withhold_forces_no_success() {
        let p = ModelParams::default();
        let s = SystemState::new(1, 0, 2, 4, 2);
        let dist = disturbance_distribution(&s, Action::Withhold, &p).unwrap();
        assert!(dist.iter().all(|(w, _)| !w.success));
        let total: f64 = dist.iter().map(|(_, q)| q).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inadmissible_action_is_rejected() {
        let p = ModelParams::default();
        let s = SystemState::initial();
        assert!(disturbance_distribution(&s, Action::Transmit, &p).is_err());
    }

    #[test]
    fn degenerate_probabilities_drop_outcomes() {
        let p = ModelParams {
            pe: 1.0,
            ps: 1.0,
            p01: 0.0,
            ..ModelParams::default()
        };
        let s = SystemState::new(0, 0, 1, 1, 0);
        let dist = disturbance_distribution(&s, Action::Transmit, &p).unwrap();
        assert_eq!(dist, vec![(Disturbance::new(true, true, 0), 1.0)]);
    }

    #[test]
    fn clamped_row_merges_outcomes() {
        let p = ModelParams {
            e_max: 2,
            d_max0: 3,
            d_max1: 3,
            ..ModelParams::default()
        };
        let k = build_kernel(&p).unwrap();
        let space = k.space();
        let s = SystemState::new(0, 0, 2, 3, 0);
        let row = k.row(space.encode(&s), Action::Withhold).unwrap();

        // Hand enumeration: harvest on a full buffer saturates, so we = 0 and
        // we = 1 land on the same next state for each wz.
        let stay = space.encode(&SystemState::new(0, 0, 2, 3, 0));
        let alarm = space.encode(&SystemState::new(1, 0, 2, 3, 0));
        let expected = [
            Transition {
                next: stay,
                prob: 0.2 * 0.9 + 0.8 * 0.9,
            },
            Transition {
                next: alarm,
                prob: 0.2 * 0.1 + 0.8 * 0.1,
            },
        ];
        assert_eq!(row.len(), 2);
        for (got, want) in row.iter().zip(expected) {
            assert_eq!(got.next, want.next);
            assert!((got.prob - want.prob).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_are_stochastic_sorted_and_merged() {
        let k = build_kernel(&ModelParams::default()).unwrap();
        for i in 0..k.num_states() {
            let s = k.space().decode(i);
            for a in [Action::Withhold, Action::Transmit] {
                match k.row(i, a) {
                    None => assert!(a == Action::Transmit && s.e == 0),
                    Some(row) => {
                        assert!(!row.is_empty() && row.len() <= 8);
                        let total: f64 = row.iter().map(|t| t.prob).sum();
                        assert!((total - 1.0).abs() < 1e-12);
                        assert!(row.windows(2).all(|w| w[0].next < w[1].next));
                        assert!(row.iter().all(|t| t.prob > 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn process_marginal_matches_transition_matrix() {
        let p = ModelParams {
            p01: 0.3,
            p10: 0.6,
            ..ModelParams::default()
        };
        let k = build_kernel(&p).unwrap();
        for i in (0..k.num_states()).step_by(7) {
            let s = k.space().decode(i);
            for &a in admissible_actions(&s) {
                let to_alarm: f64 = k
                    .row(i, a)
                    .unwrap()
                    .iter()
                    .filter(|t| k.space().decode(t.next).z == 1)
                    .map(|t| t.prob)
                    .sum();
                assert!((to_alarm - p.process_transition(s.z, 1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rebuild_is_identical() {
        let p = ModelParams::default();
        assert_eq!(build_kernel(&p).unwrap(), build_kernel(&p).unwrap());
    }
}
