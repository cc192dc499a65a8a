//! Five-state chain used to check the learner against value iteration.
//!
//! States 0..=3 are transient and state 4 is absorbing. Action 0 moves left
//! (staying put at state 0), action 1 moves right. Entering state 4 pays 1;
//! every other move pays 0.

use super::agent::{EnvStep, EpsilonSchedule, Environment, TrainConfig};
use crate::error::Result;

pub const CHAIN_STATES: usize = 5;
pub const GOAL: usize = CHAIN_STATES - 1;
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Debug, Clone)]
pub struct ChainMdp {
    pub state: usize,
    pub steps: usize,
    pub max_steps: usize,
}

impl ChainMdp {
    pub fn new(max_steps: usize) -> Self {
        ChainMdp {
            state: 0,
            steps: 0,
            max_steps,
        }
    }

    /// Deterministic dynamics: next state and reward.
    pub fn transition(s: usize, a: usize) -> (usize, f64) {
        let next = if a == RIGHT { s + 1 } else { s.saturating_sub(1) };
        (next, if next == GOAL { 1.0 } else { 0.0 })
    }

    pub fn one_hot(s: usize) -> Vec<f64> {
        let mut v = vec![0.0; CHAIN_STATES];
        v[s] = 1.0;
        v
    }
}

impl Environment for ChainMdp {
    fn action_count(&self) -> usize {
        2
    }

    fn state_len(&self) -> usize {
        CHAIN_STATES
    }

    /// Episodes cycle through the transient start states.
    fn reset(&mut self, episode: usize) -> Result<Vec<f64>> {
        self.state = episode % GOAL;
        self.steps = 0;
        Ok(Self::one_hot(self.state))
    }

    fn step(&mut self, action: usize) -> Result<EnvStep> {
        let (next, reward) = Self::transition(self.state, action);
        self.state = next;
        self.steps += 1;
        let terminal = next == GOAL;
        let done = terminal || self.steps >= self.max_steps;
        Ok(EnvStep {
            reward,
            state: Self::one_hot(next),
            valid: true,
            done,
            terminal,
            end: done.then(|| if terminal { "goal" } else { "limit" }.to_string()),
        })
    }
}

/// Learner settings that converge on the chain within 5000 observed states.
pub fn chain_config(seed: u64) -> TrainConfig {
    TrainConfig {
        gamma: 0.9,
        batch: 32,
        sync_every: 50,
        total_states: 5000,
        learning_rate: 1e-3,
        memory_capacity: 500,
        hidden: vec![32, 32],
        epsilon: EpsilonSchedule {
            start: 1.0,
            end: 0.2,
            anneal_states: 2000,
            eval: 0.05,
        },
        max_episodes: None,
        seed,
    }
}

/// Optimal action values of the transient states, by value iteration.
pub fn value_iteration(gamma: f64, tol: f64) -> Vec<[f64; 2]> {
    let mut q = vec![[0.0; 2]; GOAL];
    loop {
        let v = |q: &[[f64; 2]], s: usize| if s == GOAL { 0.0 } else { q[s][0].max(q[s][1]) };
        let mut next = q.clone();
        for (s, row) in next.iter_mut().enumerate() {
            for (a, cell) in row.iter_mut().enumerate() {
                let (n, r) = ChainMdp::transition(s, a);
                *cell = r + gamma * v(&q, n);
            }
        }
        let delta = q
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()])
            .fold(0.0, f64::max);
        q = next;
        if delta < tol {
            return q;
        }
    }
}
