//! The training loop: epsilon-greedy rollouts over the edit environment,
//! replay-sampled Bellman regression against a periodically synced target
//! network, and a deduplicated pool of terminal molecules.

use super::env::{Action, Environment, MolState};
use super::qnet::QNetwork;
use super::replay::{ReplayBuffer, Transition};
use super::{q_target, DqnConfig, DqnError};
use crate::chem::{canonical_smiles, MolGraph};
use crate::fingerprint::Fingerprint;
use crate::scoring::{ScoreError, ScoreFunction, ScoreReport};
use crate::tensor::ops::{mean, mul, sub};
use crate::tensor::{AdamOptimizer, AdamParams, Rng, Tape, Tensor};
use serde::Serialize;
use std::collections::BTreeMap;

/// Reward signal evaluated on the molecule each action produces.
pub trait Reward {
    fn evaluate(&self, mol: &MolGraph) -> Result<(f64, Option<ScoreReport>), ScoreError>;
}

impl Reward for ScoreFunction {
    fn evaluate(&self, mol: &MolGraph) -> Result<(f64, Option<ScoreReport>), ScoreError> {
        let report = self.score(mol)?;
        Ok((report.total, Some(report)))
    }
}

/// Heavy-atom count as the reward; used by optimization sanity runs.
pub struct HeavyAtomReward;

impl Reward for HeavyAtomReward {
    fn evaluate(&self, mol: &MolGraph) -> Result<(f64, Option<ScoreReport>), ScoreError> {
        Ok((mol.atom_count() as f64, None))
    }
}

/// One emitted step of an episode log.
#[derive(Debug, Clone, Serialize)]
pub struct StepLog {
    pub episode: usize,
    pub step: u32,
    pub smiles: String,
    pub reward: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: Vec<StepLog>,
    pub final_smiles: String,
    pub final_reward: f64,
}

/// A unique terminal molecule with its score and discovery point.
#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub canonical: String,
    pub total: f64,
    pub report: Option<ScoreReport>,
    pub episode: usize,
    pub global_step: u64,
}

pub struct DqnOutcome {
    pub qnet: QNetwork,
    pub episodes: Vec<EpisodeLog>,
    /// Deduplicated terminal molecules keyed by canonical SMILES.
    pub pool: Vec<PoolEntry>,
    /// Best terminal reward seen so far, per episode (non-decreasing).
    pub best_curve: Vec<f64>,
    pub epsilon_curve: Vec<f64>,
}

impl DqnOutcome {
    /// Episode log as JSON lines: one object per step.
    pub fn episodes_jsonl(&self) -> String {
        let mut out = String::new();
        for ep in &self.episodes {
            for step in &ep.steps {
                out.push_str(&serde_json::to_string(step).expect("serializable"));
                out.push('\n');
            }
        }
        out
    }

    /// Candidate pool in the shared score-CSV schema.
    pub fn pool_csv(&self) -> String {
        let filled: Vec<(String, ScoreReport)> = self
            .pool
            .iter()
            .map(|e| {
                let report = e.report.clone().unwrap_or(ScoreReport {
                    total: e.total,
                    components: BTreeMap::new(),
                });
                (e.canonical.clone(), report)
            })
            .collect();
        let rows: Vec<(String, &ScoreReport)> =
            filled.iter().map(|(s, r)| (s.clone(), r)).collect();
        crate::scoring::score_csv(&rows)
    }
}

/// Exploration probability for an episode: linear from start to end over the
/// first `epsilon_decay_fraction` of episodes, then flat at the floor.
pub fn epsilon_at(cfg: &DqnConfig, episode: usize) -> f64 {
    let span = (cfg.episodes as f64 * cfg.epsilon_decay_fraction).max(1.0);
    if (episode as f64) < span {
        cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * episode as f64 / span
    } else {
        cfg.epsilon_end
    }
}

/// Runs the full training schedule.
pub fn train_agent(reward: &dyn Reward, cfg: &DqnConfig) -> Result<DqnOutcome, DqnError> {
    cfg.validate()?;
    let mut seed_rng = Rng::seed_from(cfg.seed);
    let mut init_rng = seed_rng.split();
    let mut action_rng = seed_rng.split();
    let mut replay_rng = seed_rng.split();

    let env = Environment::new(cfg.elements.clone(), cfg.max_steps);
    let online = QNetwork::new("q", cfg.fp_width, &cfg.hidden, cfg.max_steps, &mut init_rng);
    let target = QNetwork::new("q_target", cfg.fp_width, &cfg.hidden, cfg.max_steps, &mut init_rng);
    target.copy_from(&online);
    let params = online.params();
    let mut optimizer = AdamOptimizer::new(&params, AdamParams::with_lr(cfg.lr));

    let mut replay = ReplayBuffer::new(cfg.replay_capacity);
    let mut pool: BTreeMap<String, PoolEntry> = BTreeMap::new();
    let mut episodes = Vec::with_capacity(cfg.episodes);
    let mut best_curve = Vec::with_capacity(cfg.episodes);
    let mut epsilon_curve = Vec::with_capacity(cfg.episodes);
    let mut best_so_far = f64::NEG_INFINITY;
    let mut global_step: u64 = 0;
    let mut updates: usize = 0;

    let fp_of = |g: &MolGraph| Fingerprint::morgan(g, cfg.fp_radius, cfg.fp_width);

    for episode in 0..cfg.episodes {
        let epsilon = epsilon_at(cfg, episode);
        epsilon_curve.push(epsilon);
        let mut state = env.initial_state();
        let mut candidates = expand(&env, &state, cfg)?;
        let mut consecutive_noops = 0u32;
        let mut steps = Vec::new();
        let mut final_reward = 0.0;

        loop {
            if state.out_of_steps() || candidates.is_empty() {
                break;
            }
            let chosen = if action_rng.uniform() < epsilon {
                action_rng.below(candidates.len())
            } else {
                let fps: Vec<&Fingerprint> = candidates.iter().map(|c| &c.2).collect();
                let values = online.values(&fps, state.steps_remaining() as f64);
                argmax(&values)
            };
            let (action, next_graph, next_fp) = candidates.swap_remove(chosen);
            let (reward_value, report) = reward.evaluate(&next_graph)?;
            let next_state = MolState {
                graph: next_graph,
                steps_taken: state.steps_taken + 1,
                max_steps: state.max_steps,
            };
            consecutive_noops =
                if action == Action::NoOp { consecutive_noops + 1 } else { 0 };
            let terminal = next_state.out_of_steps()
                || consecutive_noops >= cfg.no_op_terminal_after;
            let next_candidates =
                if terminal { Vec::new() } else { expand(&env, &next_state, cfg)? };

            replay.push(Transition {
                state_fp: fp_of(&state.graph),
                action_fp: next_fp,
                reward: reward_value,
                terminal,
                steps_remaining: state.steps_remaining() as f64,
                next_candidate_fps: next_candidates.iter().map(|c| c.2.clone()).collect(),
                steps_remaining_next: next_state.steps_remaining() as f64,
            });

            let smiles = canonical_smiles(&next_state.graph).into_string();
            steps.push(StepLog {
                episode,
                step: next_state.steps_taken,
                smiles: smiles.clone(),
                reward: reward_value,
                epsilon,
            });
            global_step += 1;
            final_reward = reward_value;

            if replay.len() >= cfg.minibatch && global_step % cfg.update_every as u64 == 0 {
                update_step(&online, &target, &mut replay, &mut replay_rng, cfg, &mut optimizer, &params);
                updates += 1;
                if updates % cfg.target_sync == 0 {
                    target.copy_from(&online);
                }
            }

            let was_terminal = terminal;
            state = next_state;
            candidates = next_candidates;

            if was_terminal {
                let entry = PoolEntry {
                    canonical: smiles.clone(),
                    total: reward_value,
                    report,
                    episode,
                    global_step,
                };
                pool.entry(smiles).or_insert(entry);
                break;
            }
        }

        best_so_far = best_so_far.max(final_reward);
        best_curve.push(best_so_far);
        episodes.push(EpisodeLog {
            episode,
            final_smiles: steps.last().map(|s| s.smiles.clone()).unwrap_or_default(),
            final_reward,
            steps,
        });
    }

    let mut pool: Vec<PoolEntry> = pool.into_values().collect();
    pool.sort_by(|a, b| a.global_step.cmp(&b.global_step));
    Ok(DqnOutcome { qnet: online, episodes, pool, best_curve, epsilon_curve })
}

type Candidate = (Action, MolGraph, Fingerprint);

/// Materializes every legal action with its successor graph and the
/// fingerprint the Q-network scores.
fn expand(env: &Environment, state: &MolState, cfg: &DqnConfig) -> Result<Vec<Candidate>, DqnError> {
    let actions = env.enumerate_actions(state);
    let mut out = Vec::with_capacity(actions.len());
    for action in actions {
        let graph = env.peek(state, &action)?;
        let fp = Fingerprint::morgan(&graph, cfg.fp_radius, cfg.fp_width);
        out.push((action, graph, fp));
    }
    Ok(out)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn update_step(
    online: &QNetwork,
    target: &QNetwork,
    replay: &mut ReplayBuffer,
    rng: &mut Rng,
    cfg: &DqnConfig,
    optimizer: &mut AdamOptimizer,
    params: &[crate::tensor::Parameter],
) {
    let batch = replay.sample(rng, cfg.minibatch);

    // Bellman targets from the target network
    let mut targets = Vec::with_capacity(batch.len());
    for t in &batch {
        let best_next = if t.terminal || t.next_candidate_fps.is_empty() {
            0.0
        } else {
            let fps: Vec<&Fingerprint> = t.next_candidate_fps.iter().collect();
            target
                .values(&fps, t.steps_remaining_next)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        };
        targets.push(q_target(t.reward, best_next, cfg.gamma, t.terminal));
    }

    // online predictions for the taken actions
    let w = cfg.fp_width + 1;
    let mut rows = Vec::with_capacity(batch.len() * w);
    for t in &batch {
        rows.extend(t.action_fp.to_f64_vec());
        rows.push(t.steps_remaining / cfg.max_steps as f64);
    }
    let x = Tensor::from_vec(vec![batch.len(), w], rows);
    let y = Tensor::from_vec(vec![batch.len(), 1], targets);
    let tape = Tape::new();
    let q = online.forward(&tape, &x);
    let err = sub(&q, &y);
    let loss = mean(&mul(&err, &err));
    loss.backward().expect("fresh tape");
    optimizer.step(params);
}

/// Cumulative count of unique pool molecules passing the potency threshold
/// (and optionally a druglikeness threshold), keyed by the global step at
/// which each was first found.
pub fn count_hits(
    pool: &[PoolEntry],
    pic50_threshold: f64,
    qed_threshold: Option<f64>,
) -> Vec<(u64, usize)> {
    let mut hits: Vec<u64> = pool
        .iter()
        .filter(|e| {
            let report = match &e.report {
                Some(r) => r,
                None => return false,
            };
            let pic50_ok = report.component("pic50").is_some_and(|p| p > pic50_threshold);
            let qed_ok = match qed_threshold {
                Some(q) => report.component("qed").is_some_and(|v| v > q),
                None => true,
            };
            pic50_ok && qed_ok
        })
        .map(|e| e.global_step)
        .collect();
    hits.sort_unstable();
    hits.into_iter().enumerate().map(|(i, step)| (step, i + 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> DqnConfig {
        DqnConfig {
            elements: vec![6, 8],
            max_steps: 6,
            episodes: 8,
            fp_width: 64,
            hidden: vec![16, 8, 8, 4],
            minibatch: 8,
            update_every: 4,
            lr: 1e-3,
            seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn epsilon_schedule_contract() {
        let cfg = DqnConfig { episodes: 100, ..Default::default() };
        let values: Vec<f64> = (0..100).map(|e| epsilon_at(&cfg, e)).collect();
        assert_eq!(values[0], 1.0);
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "epsilon increased");
        }
        assert_eq!(values[99], cfg.epsilon_end);
        assert_eq!(values[60], cfg.epsilon_end);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = tiny_cfg();
        let a = train_agent(&HeavyAtomReward, &cfg).unwrap();
        let b = train_agent(&HeavyAtomReward, &cfg).unwrap();
        assert_eq!(a.episodes_jsonl(), b.episodes_jsonl());
        assert_eq!(a.best_curve, b.best_curve);
    }

    #[test]
    fn best_curve_is_monotone() {
        let outcome = train_agent(&HeavyAtomReward, &tiny_cfg()).unwrap();
        for w in outcome.best_curve.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(outcome.best_curve.len(), 8);
    }

    #[test]
    fn pool_is_deduplicated_and_ordered() {
        let outcome = train_agent(&HeavyAtomReward, &tiny_cfg()).unwrap();
        let mut seen = std::collections::HashSet::new();
        for e in &outcome.pool {
            assert!(seen.insert(e.canonical.clone()), "duplicate {}", e.canonical);
        }
        for w in outcome.pool.windows(2) {
            assert!(w[0].global_step <= w[1].global_step);
        }
    }

    #[test]
    fn episode_logs_are_bounded() {
        let outcome = train_agent(&HeavyAtomReward, &tiny_cfg()).unwrap();
        for ep in &outcome.episodes {
            assert!(ep.steps.len() <= 6);
            assert!(!ep.final_smiles.is_empty());
        }
        let jsonl = outcome.episodes_jsonl();
        assert!(jsonl.lines().all(|l| l.starts_with('{')));
    }

    #[test]
    fn count_hits_is_cumulative_and_filtered() {
        let mk = |pic50: f64, qed: f64, step: u64| {
            let mut components = BTreeMap::new();
            components.insert("pic50".to_string(), pic50);
            components.insert("qed".to_string(), qed);
            PoolEntry {
                canonical: format!("m{step}"),
                total: pic50,
                report: Some(ScoreReport { total: pic50, components }),
                episode: 0,
                global_step: step,
            }
        };
        let pool = vec![mk(9.0, 0.7, 5), mk(7.0, 0.9, 8), mk(8.5, 0.3, 12), mk(10.0, 0.8, 20)];
        let single = count_hits(&pool, 8.0, None);
        assert_eq!(single, vec![(5, 1), (12, 2), (20, 3)]);
        let double = count_hits(&pool, 8.0, Some(0.5));
        assert_eq!(double, vec![(5, 1), (20, 2)]);
        assert!(double.len() <= single.len());
        assert!(count_hits(&[], 8.0, None).is_empty());
    }
}
