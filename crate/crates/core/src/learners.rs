//! Tabular agents shared by the data owners and the curator's per-owner
//! learners: win-or-learn-fast policy hill-climbing, plain Q-learning,
//! and a myopic best-response baseline.
//!
//! A `LearnerState` is owned by exactly one agent. All randomness is
//! drawn from a caller-supplied stream so trajectories are reproducible
//! regardless of how agents are scheduled.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game_model::check_simplex;

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("state {0} out of range")]
    StateOutOfRange(usize),
    #[error("action {0} out of range")]
    ActionOutOfRange(usize),
    #[error("average-policy update requires visit_count >= 1 for the state")]
    UnvisitedState,
    #[error(transparent)]
    InvalidRow(#[from] crate::game_model::ModelError),
}

/// Step-size schedule and learning constants for the hill-climbing agent.
///
/// The winning step is `1 / (base + t / slope)`; the losing step is
/// `psi_l_multiplier` times the winning step and must exceed it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfParams {
    /// Q-learning rate, in (0, 1].
    pub eta: f64,
    /// Discount factor, in (0, 1].
    pub discount: f64,
    pub psi_base: f64,
    pub psi_slope: f64,
    /// Ratio of the losing to the winning step size; must be > 1.
    pub psi_l_multiplier: f64,
}

impl WolfParams {
    pub fn psi_win(&self, t: u64) -> f64 {
        1.0 / (self.psi_base + t as f64 / self.psi_slope)
    }

    pub fn psi_lose(&self, t: u64) -> f64 {
        self.psi_l_multiplier * self.psi_win(t)
    }
}

/// Tabular state of one agent: Q-values, current mixed policy, average
/// mixed policy, and per-state visit counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    num_states: usize,
    num_actions: usize,
    q_table: Vec<f64>,
    policy: Vec<f64>,
    avg_policy: Vec<f64>,
    visit_count: Vec<u64>,
}

impl LearnerState {
    /// Zero Q-values, uniform policies, zero visits.
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        assert!(num_states > 0 && num_actions > 0);
        let uniform = 1.0 / num_actions as f64;
        Self {
            num_states,
            num_actions,
            q_table: vec![0.0; num_states * num_actions],
            policy: vec![uniform; num_states * num_actions],
            avg_policy: vec![uniform; num_states * num_actions],
            visit_count: vec![0; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn q_row(&self, state: usize) -> &[f64] {
        &self.q_table[state * self.num_actions..(state + 1) * self.num_actions]
    }

    pub fn policy_row(&self, state: usize) -> &[f64] {
        &self.policy[state * self.num_actions..(state + 1) * self.num_actions]
    }

    pub fn avg_policy_row(&self, state: usize) -> &[f64] {
        &self.avg_policy[state * self.num_actions..(state + 1) * self.num_actions]
    }

    pub fn visit_count(&self, state: usize) -> u64 {
        self.visit_count[state]
    }

    /// State with the highest visit count; ties break to the lowest index.
    pub fn most_visited_state(&self) -> usize {
        argmax_u64(&self.visit_count)
    }

    pub fn record_visit(&mut self, state: usize) {
        self.visit_count[state] += 1;
    }

    fn check_state(&self, state: usize) -> Result<(), LearnerError> {
        if state >= self.num_states {
            return Err(LearnerError::StateOutOfRange(state));
        }
        Ok(())
    }

    /// One Bellman step on a single Q cell:
    /// `Q(s,a) <- (1 - eta) Q(s,a) + eta (r + discount * max_a' Q(s',a'))`.
    pub fn q_update(
        &mut self,
        state: usize,
        action: usize,
        reward: f64,
        next_state: usize,
        eta: f64,
        discount: f64,
    ) -> Result<(), LearnerError> {
        self.check_state(state)?;
        self.check_state(next_state)?;
        if action >= self.num_actions {
            return Err(LearnerError::ActionOutOfRange(action));
        }
        let next_max = self
            .q_row(next_state)
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let cell = &mut self.q_table[state * self.num_actions + action];
        *cell = (1.0 - eta) * *cell + eta * (reward + discount * next_max);
        Ok(())
    }

    /// Greedy action of a state's Q row; ties break to the lowest index.
    pub fn greedy_action(&self, state: usize) -> usize {
        argmax_f64(self.q_row(state))
    }

    /// Hill-climbing step: the greedy action gains `step`, every other
    /// action loses `step / (num_actions - 1)`; the row is then clipped
    /// to [0, 1] and renormalized.
    pub fn phc_policy_update(&mut self, state: usize, step: f64) -> Result<(), LearnerError> {
        self.check_state(state)?;
        let greedy = self.greedy_action(state);
        let n = self.num_actions;
        let row = &mut self.policy[state * n..(state + 1) * n];
        if n == 1 {
            row[0] = 1.0;
            return Ok(());
        }
        let penalty = step / (n - 1) as f64;
        for (a, p) in row.iter_mut().enumerate() {
            if a == greedy {
                *p += step;
            } else {
                *p -= penalty;
            }
            *p = p.clamp(0.0, 1.0);
        }
        let sum: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= sum;
        }
        Ok(())
    }

    /// Win-or-learn-fast step selection: the losing (larger) step applies
    /// when the current policy's Q-weighted value does not exceed the
    /// average policy's.
    pub fn wolf_step_size(&self, state: usize, t: u64, params: &WolfParams) -> f64 {
        let q = self.q_row(state);
        let current: f64 = self
            .policy_row(state)
            .iter()
            .zip(q)
            .map(|(p, v)| p * v)
            .sum();
        let average: f64 = self
            .avg_policy_row(state)
            .iter()
            .zip(q)
            .map(|(p, v)| p * v)
            .sum();
        if current <= average {
            params.psi_lose(t)
        } else {
            params.psi_win(t)
        }
    }

    /// Harmonic drift of the average policy toward the current policy:
    /// `avg <- avg + (policy - avg) / visit_count(state)`.
    ///
    /// The visit count must already include the current visit.
    pub fn avg_policy_update(&mut self, state: usize) -> Result<(), LearnerError> {
        self.check_state(state)?;
        let count = self.visit_count[state];
        if count == 0 {
            return Err(LearnerError::UnvisitedState);
        }
        let n = self.num_actions;
        let pol = &self.policy[state * n..(state + 1) * n];
        let avg = &mut self.avg_policy[state * n..(state + 1) * n];
        for (a, p) in avg.iter_mut().zip(pol) {
            *a += (p - *a) / count as f64;
        }
        Ok(())
    }

    /// Samples an action from the state's mixed policy.
    pub fn select_action<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        sample_categorical(self.policy_row(state), rng)
    }

    /// Epsilon-greedy selection over the Q row.
    pub fn qlearning_select<R: Rng + ?Sized>(
        &self,
        state: usize,
        epsilon: f64,
        rng: &mut R,
    ) -> usize {
        if rng.random::<f64>() < epsilon {
            rng.random_range(0..self.num_actions)
        } else {
            self.greedy_action(state)
        }
    }

    /// Overwrites a state's policy row; the row must be a valid simplex.
    pub fn set_policy_row(&mut self, state: usize, probs: &[f64]) -> Result<(), LearnerError> {
        self.check_state(state)?;
        self.check_row(probs)?;
        let n = self.num_actions;
        self.policy[state * n..(state + 1) * n].copy_from_slice(probs);
        Ok(())
    }

    /// Overwrites a state's average-policy row; the row must be a valid
    /// simplex.
    pub fn set_avg_policy_row(&mut self, state: usize, probs: &[f64]) -> Result<(), LearnerError> {
        self.check_state(state)?;
        self.check_row(probs)?;
        let n = self.num_actions;
        self.avg_policy[state * n..(state + 1) * n].copy_from_slice(probs);
        Ok(())
    }

    fn check_row(&self, probs: &[f64]) -> Result<(), LearnerError> {
        if probs.len() != self.num_actions {
            return Err(LearnerError::InvalidRow(
                crate::game_model::ModelError::LengthMismatch {
                    expected: self.num_actions,
                    got: probs.len(),
                },
            ));
        }
        check_simplex(probs)?;
        Ok(())
    }

    /// Overwrites a state's policy row with a point mass.
    pub fn set_point_mass(&mut self, state: usize, action: usize) -> Result<(), LearnerError> {
        self.check_state(state)?;
        if action >= self.num_actions {
            return Err(LearnerError::ActionOutOfRange(action));
        }
        let n = self.num_actions;
        let row = &mut self.policy[state * n..(state + 1) * n];
        row.fill(0.0);
        row[action] = 1.0;
        Ok(())
    }

    /// Checks every policy and average-policy row against the simplex
    /// contract.
    pub fn check_policies(&self) -> Result<(), crate::game_model::ModelError> {
        for s in 0..self.num_states {
            check_simplex(self.policy_row(s))?;
            check_simplex(self.avg_policy_row(s))?;
        }
        Ok(())
    }

    /// Visit-weighted average of the policy rows; uniform when nothing
    /// has been visited.
    pub fn visit_weighted_policy(&self) -> Vec<f64> {
        let total: u64 = self.visit_count.iter().sum();
        if total == 0 {
            return vec![1.0 / self.num_actions as f64; self.num_actions];
        }
        let mut out = vec![0.0; self.num_actions];
        for s in 0..self.num_states {
            let w = self.visit_count[s] as f64 / total as f64;
            for (o, p) in out.iter_mut().zip(self.policy_row(s)) {
                *o += w * p;
            }
        }
        out
    }
}

/// Exploration schedule of the Q-learning baseline:
/// `max(floor, 1 / (1 + t / decay))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub floor: f64,
    pub decay: f64,
}

impl EpsilonSchedule {
    pub fn epsilon(&self, t: u64) -> f64 {
        self.floor.max(1.0 / (1.0 + t as f64 / self.decay))
    }
}

/// Myopic best response: the own action maximizing the immediate payoff
/// against the opponent's last realized action. Ties break low.
pub fn greedy_select<F: Fn(usize) -> f64>(num_actions: usize, payoff_of_action: F) -> usize {
    assert!(num_actions > 0);
    let payoffs: Vec<f64> = (0..num_actions).map(payoff_of_action).collect();
    argmax_f64(&payoffs)
}

fn argmax_f64(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn argmax_u64(values: &[u64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
