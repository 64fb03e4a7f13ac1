//! Uniform-sampling ring buffer of transitions. Each record carries the
//! fingerprints of the next state's candidate actions so Bellman targets can
//! be evaluated against the current target network at update time.

use crate::fingerprint::Fingerprint;
use crate::tensor::Rng;
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct Transition {
    /// Fingerprint of the state the action was taken in.
    pub state_fp: Fingerprint,
    /// Fingerprint of the molecule the chosen action produced.
    pub action_fp: Fingerprint,
    pub reward: f64,
    pub terminal: bool,
    /// Steps remaining at the decision point.
    pub steps_remaining: f64,
    /// Candidate-action fingerprints available from the successor state.
    pub next_candidate_fps: Vec<Fingerprint>,
    pub steps_remaining_next: f64,
}

pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        ReplayBuffer { items: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Uniform sample with replacement.
    pub fn sample(&self, rng: &mut Rng, k: usize) -> Vec<&Transition> {
        (0..k).map(|_| &self.items[rng.below(self.items.len())]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn transition(reward: f64) -> Transition {
        let fp = Fingerprint::morgan(&parse_smiles("C").unwrap(), 1, 64);
        Transition {
            state_fp: fp.clone(),
            action_fp: fp,
            reward,
            terminal: false,
            steps_remaining: 10.0,
            next_candidate_fps: Vec::new(),
            steps_remaining_next: 9.0,
        }
    }

    #[test]
    fn ring_buffer_evicts_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(transition(i as f64));
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = buf.items.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn sampling_is_uniform_ish() {
        let mut buf = ReplayBuffer::new(10);
        for i in 0..10 {
            buf.push(transition(i as f64));
        }
        let mut rng = Rng::seed_from(5);
        let mut counts = [0usize; 10];
        for t in buf.sample(&mut rng, 10_000) {
            counts[t.reward as usize] += 1;
        }
        for &c in &counts {
            assert!((700..1300).contains(&c), "skewed counts {counts:?}");
        }
    }
}
