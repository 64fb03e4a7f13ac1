//! Deep Q-learning molecule builder: a valence-checked graph-edit
//! environment, a Q-network over fingerprints of candidate next states,
//! Bellman targets with a target network, and epsilon-greedy exploration
//! that decays over training.

mod agent;
mod env;
mod qnet;
mod replay;

pub use agent::{
    count_hits, epsilon_at, train_agent, DqnOutcome, EpisodeLog, HeavyAtomReward, PoolEntry,
    Reward, StepLog,
};
pub use env::{Action, Environment, MolState};
pub use qnet::QNetwork;
pub use replay::{ReplayBuffer, Transition};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DqnError {
    #[error("action is not legal in this state: {0}")]
    IllegalAction(String),
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("bad configuration: {0}")]
    ConfigError(String),
    #[error(transparent)]
    Score(#[from] crate::scoring::ScoreError),
    #[error("graph edit failed: {0}")]
    Chem(#[from] crate::chem::ChemError),
}

#[derive(Debug, Clone)]
pub struct DqnConfig {
    /// Atomic numbers the agent may add.
    pub elements: Vec<u8>,
    pub max_steps: u32,
    pub episodes: usize,
    /// Bellman discount.
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of episodes over which epsilon decays linearly before
    /// holding at the floor.
    pub epsilon_decay_fraction: f64,
    pub fp_radius: u32,
    pub fp_width: usize,
    /// Hidden layer widths of the Q-network.
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub replay_capacity: usize,
    pub minibatch: usize,
    /// Updates between target-network syncs.
    pub target_sync: usize,
    /// Environment steps between gradient updates.
    pub update_every: usize,
    /// Consecutive no-ops that end the episode.
    pub no_op_terminal_after: u32,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            elements: vec![6, 7, 8],
            max_steps: 40,
            episodes: 5000,
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.6,
            fp_radius: 2,
            fp_width: 2048,
            hidden: vec![1024, 512, 128, 32],
            lr: 1e-4,
            replay_capacity: 10_000,
            minibatch: 64,
            target_sync: 200,
            update_every: 1,
            no_op_terminal_after: 2,
            seed: 17,
        }
    }
}

impl DqnConfig {
    /// Minutes-scale profile.
    pub fn desk() -> DqnConfig {
        DqnConfig {
            episodes: 300,
            fp_width: 256,
            hidden: vec![64, 32, 16, 8],
            minibatch: 16,
            update_every: 2,
            lr: 1e-3,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), DqnError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(DqnError::ConfigError(format!("gamma {} outside [0,1]", self.gamma)));
        }
        if self.epsilon_start < self.epsilon_end {
            return Err(DqnError::ConfigError(format!(
                "epsilon bounds inverted: start {} < end {}",
                self.epsilon_start, self.epsilon_end
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return Err(DqnError::ConfigError("epsilon decay fraction outside [0,1]".into()));
        }
        if self.elements.is_empty() {
            return Err(DqnError::ConfigError("element set is empty".into()));
        }
        if !self.fp_width.is_power_of_two() {
            return Err(DqnError::ConfigError("fingerprint width must be a power of two".into()));
        }
        Ok(())
    }
}

/// Bellman regression target: the reward alone on terminal transitions,
/// otherwise reward plus the discounted best next-state value.
pub fn q_target(reward: f64, next_state_best_q: f64, gamma: f64, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * next_state_best_q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_target_arithmetic() {
        assert_eq!(q_target(2.5, 99.0, 0.9, true), 2.5);
        assert_eq!(q_target(1.0, 3.0, 0.0, false), 1.0);
        assert!((q_target(1.0, 3.0, 0.9, false) - 3.7).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(DqnConfig::default().validate().is_ok());
        let bad = DqnConfig { gamma: 1.5, ..Default::default() };
        assert!(matches!(bad.validate(), Err(DqnError::ConfigError(_))));
        let inverted = DqnConfig { epsilon_start: 0.01, epsilon_end: 0.5, ..Default::default() };
        assert!(matches!(inverted.validate(), Err(DqnError::ConfigError(_))));
    }
}
