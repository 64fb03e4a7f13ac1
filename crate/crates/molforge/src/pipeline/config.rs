//! Run configuration: a flat key = value file over two named presets.
//! Unknown keys are rejected; the `MOLFORGE_SEED` environment variable
//! overrides the seed.

use super::PipelineError;
use crate::dqn::DqnConfig;
use crate::jtvae::{VaeConfig, VaeTrainConfig};
use crate::mpnn::{Aggregator, ReadoutMode, ReadoutSpec, SurrogateConfig, TrainConfig};
use crate::scoring::ScoreKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Minutes-scale dimensions for local runs and CI.
    Desk,
    /// Full-size hyperparameters.
    Paper,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub profile: Profile,
    pub seed: u64,
    /// `toy:N` for the generated corpus or a path to a raw CSV.
    pub input: String,
    pub artifacts: String,

    pub surrogate: SurrogateConfig,
    pub surrogate_train: TrainConfig,

    pub vae_hidden: usize,
    pub vae_latent: usize,
    pub vae_depth: usize,
    pub vae_train: VaeTrainConfig,

    pub bo_iterations: usize,
    pub bo_batch: usize,
    pub bo_init_design: usize,
    pub bo_restarts: usize,
    pub bo_ascent_steps: usize,

    pub dqn: DqnConfig,

    pub score_kind: ScoreKind,
    pub zscore: bool,
    pub screen_delta: f64,
    pub dtba_threshold: f64,
    pub dtba_epochs: usize,
    pub dtba_pairs: usize,
    pub report_top_k: usize,
    pub sample_count: usize,
}

impl RunConfig {
    pub fn desk() -> RunConfig {
        RunConfig {
            profile: Profile::Desk,
            seed: 7,
            input: "toy:50".into(),
            artifacts: "artifacts".into(),
            surrogate: SurrogateConfig {
                width: 32,
                depth: 3,
                readout: ReadoutSpec {
                    mode: ReadoutMode::Atomic,
                    aggregator: Aggregator::Attention,
                },
                attention_depth: 1,
                elements: vec![1, 5, 6, 7, 8, 9, 15, 16, 17, 35, 53],
            },
            surrogate_train: TrainConfig {
                lr: 3e-3,
                batch_size: 16,
                epochs: 60,
                patience: 60,
                seed: 7,
                val_fraction: 0.1,
            },
            vae_hidden: 64,
            vae_latent: 16,
            vae_depth: 3,
            vae_train: VaeTrainConfig {
                iterations: 300,
                batch_size: 8,
                lr: 1e-3,
                beta_max: 0.01,
                beta_warmup: 100,
                seed: 7,
            },
            bo_iterations: 10,
            bo_batch: 50,
            bo_init_design: 40,
            bo_restarts: 20,
            bo_ascent_steps: 40,
            dqn: DqnConfig {
                episodes: 120,
                fp_width: 256,
                hidden: vec![64, 32, 16, 8],
                minibatch: 16,
                update_every: 2,
                lr: 1e-3,
                seed: 7,
                ..DqnConfig::default()
            },
            score_kind: ScoreKind::Pic50QedPen,
            zscore: false,
            screen_delta: 8.0,
            dtba_threshold: 0.5,
            dtba_epochs: 25,
            dtba_pairs: 120,
            report_top_k: 3,
            sample_count: 200,
        }
    }

    pub fn paper() -> RunConfig {
        let mut cfg = RunConfig::desk();
        cfg.profile = Profile::Paper;
        cfg.input = "dataset.csv".into();
        cfg.surrogate = SurrogateConfig::default(); // width 256, depth 8
        cfg.surrogate_train =
            TrainConfig { lr: 1e-4, batch_size: 32, epochs: 300, patience: 25, seed: 7, val_fraction: 0.1 };
        cfg.vae_hidden = 450;
        cfg.vae_latent = 56;
        cfg.vae_depth = 3;
        cfg.vae_train = VaeTrainConfig {
            iterations: 8300,
            batch_size: 8,
            lr: 1e-3,
            beta_max: 0.01,
            beta_warmup: 500,
            seed: 7,
        };
        cfg.bo_init_design = 500;
        cfg.bo_restarts = 60;
        cfg.bo_ascent_steps = 100;
        cfg.dqn = DqnConfig::default();
        cfg.sample_count = 1000;
        cfg
    }

    pub fn vae_config(&self, vocab_size: usize) -> VaeConfig {
        VaeConfig {
            hidden: self.vae_hidden,
            latent: self.vae_latent,
            depth: self.vae_depth,
            node_budget: 50,
            vocab_size,
        }
    }

    /// Parses the key = value text. The profile key is applied first so
    /// later keys override its defaults. `MOLFORGE_SEED` wins over the file.
    pub fn from_text(text: &str) -> Result<RunConfig, PipelineError> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }

        let mut cfg = match pairs.iter().find(|(k, _)| k == "profile") {
            Some((_, v)) => match v.as_str() {
                "desk" => RunConfig::desk(),
                "paper" => RunConfig::paper(),
                other => {
                    return Err(PipelineError::Config(format!("unknown profile '{other}'")))
                }
            },
            None => RunConfig::desk(),
        };
        for (key, value) in &pairs {
            if key != "profile" {
                cfg.apply(key, value)?;
            }
        }
        if let Ok(seed) = std::env::var("MOLFORGE_SEED") {
            let seed: u64 = seed.parse().map_err(|_| {
                PipelineError::Config(format!("MOLFORGE_SEED is not an integer: {seed}"))
            })?;
            cfg.set_seed(seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{path:?}: {e}")))?;
        Self::from_text(&text)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.surrogate_train.seed = seed;
        self.vae_train.seed = seed;
        self.dqn.seed = seed;
    }

    fn validate(&self) -> Result<(), PipelineError> {
        self.dqn.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.screen_delta.is_nan() {
            return Err(PipelineError::Config("screen.delta must be a number".into()));
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let bad = |what: &str| PipelineError::Config(format!("bad value for {what}: {value}"));
        match key {
            "seed" => self.set_seed(value.parse().map_err(|_| bad(key))?),
            "data.input" => self.input = value.to_string(),
            "paths.artifacts" => self.artifacts = value.to_string(),

            "surrogate.width" => self.surrogate.width = value.parse().map_err(|_| bad(key))?,
            "surrogate.depth" => self.surrogate.depth = value.parse().map_err(|_| bad(key))?,
            "surrogate.readout_mode" => {
                self.surrogate.readout.mode = match value {
                    "atomic" => ReadoutMode::Atomic,
                    "molecular" => ReadoutMode::Molecular,
                    _ => return Err(bad(key)),
                }
            }
            "surrogate.aggregator" => {
                self.surrogate.readout.aggregator = match value {
                    "sum" => Aggregator::Sum,
                    "mean" => Aggregator::Mean,
                    "max" => Aggregator::Max,
                    "softmax" => Aggregator::Softmax,
                    "attention" => Aggregator::Attention,
                    _ => return Err(bad(key)),
                }
            }
            "surrogate.epochs" => {
                self.surrogate_train.epochs = value.parse().map_err(|_| bad(key))?
            }
            "surrogate.lr" => self.surrogate_train.lr = value.parse().map_err(|_| bad(key))?,
            "surrogate.batch_size" => {
                self.surrogate_train.batch_size = value.parse().map_err(|_| bad(key))?
            }
            "surrogate.patience" => {
                self.surrogate_train.patience = value.parse().map_err(|_| bad(key))?
            }

            "vae.hidden" => self.vae_hidden = value.parse().map_err(|_| bad(key))?,
            "vae.latent" => self.vae_latent = value.parse().map_err(|_| bad(key))?,
            "vae.depth" => self.vae_depth = value.parse().map_err(|_| bad(key))?,
            "vae.iterations" => {
                self.vae_train.iterations = value.parse().map_err(|_| bad(key))?
            }
            "vae.batch_size" => {
                self.vae_train.batch_size = value.parse().map_err(|_| bad(key))?
            }
            "vae.lr" => self.vae_train.lr = value.parse().map_err(|_| bad(key))?,
            "vae.beta_max" => self.vae_train.beta_max = value.parse().map_err(|_| bad(key))?,
            "vae.beta_warmup" => {
                self.vae_train.beta_warmup = value.parse().map_err(|_| bad(key))?
            }

            "bo.iterations" => self.bo_iterations = value.parse().map_err(|_| bad(key))?,
            "bo.batch" => self.bo_batch = value.parse().map_err(|_| bad(key))?,
            "bo.init_design" => self.bo_init_design = value.parse().map_err(|_| bad(key))?,
            "bo.restarts" => self.bo_restarts = value.parse().map_err(|_| bad(key))?,
            "bo.ascent_steps" => self.bo_ascent_steps = value.parse().map_err(|_| bad(key))?,

            "dqn.episodes" => self.dqn.episodes = value.parse().map_err(|_| bad(key))?,
            "dqn.max_steps" => self.dqn.max_steps = value.parse().map_err(|_| bad(key))?,
            "dqn.gamma" => self.dqn.gamma = value.parse().map_err(|_| bad(key))?,
            "dqn.fp_width" => self.dqn.fp_width = value.parse().map_err(|_| bad(key))?,
            "dqn.minibatch" => self.dqn.minibatch = value.parse().map_err(|_| bad(key))?,
            "dqn.update_every" => {
                self.dqn.update_every = value.parse().map_err(|_| bad(key))?
            }
            "dqn.lr" => self.dqn.lr = value.parse().map_err(|_| bad(key))?,
            "dqn.epsilon_start" => {
                self.dqn.epsilon_start = value.parse().map_err(|_| bad(key))?
            }
            "dqn.epsilon_end" => self.dqn.epsilon_end = value.parse().map_err(|_| bad(key))?,
            "dqn.elements" => {
                let mut elements = Vec::new();
                for symbol in value.split(',') {
                    elements.push(
                        crate::chem::atomic_number(symbol.trim()).ok_or_else(|| bad(key))?,
                    );
                }
                self.dqn.elements = elements;
            }

            "scoring.kind" => {
                self.score_kind = ScoreKind::parse(value).ok_or_else(|| bad(key))?
            }
            "scoring.zscore" => self.zscore = value.parse().map_err(|_| bad(key))?,
            "screen.delta" => self.screen_delta = value.parse().map_err(|_| bad(key))?,
            "dtba.threshold" => self.dtba_threshold = value.parse().map_err(|_| bad(key))?,
            "dtba.epochs" => self.dtba_epochs = value.parse().map_err(|_| bad(key))?,
            "dtba.pairs" => self.dtba_pairs = value.parse().map_err(|_| bad(key))?,
            "report.top_k" => self.report_top_k = value.parse().map_err(|_| bad(key))?,
            "report.samples" => self.sample_count = value.parse().map_err(|_| bad(key))?,
            other => {
                return Err(PipelineError::Config(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_profile_and_overrides() {
        let cfg = RunConfig::from_text(
            "profile = desk\nseed = 99\nsurrogate.width = 16 # trailing comment\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.surrogate.width, 16);
        assert_eq!(cfg.dqn.seed, 99);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_text("surrogate.depht = 3\n");
        assert!(matches!(err, Err(PipelineError::Config(msg)) if msg.contains("surrogate.depht")));
    }

    #[test]
    fn bad_values_rejected() {
        assert!(RunConfig::from_text("seed = banana\n").is_err());
        assert!(RunConfig::from_text("scoring.kind = nonsense\n").is_err());
        assert!(RunConfig::from_text("dqn.gamma = 2.0\n").is_err());
    }

    #[test]
    fn element_list_parses() {
        let cfg = RunConfig::from_text("dqn.elements = C, N, O, F\n").unwrap();
        assert_eq!(cfg.dqn.elements, vec![6, 7, 8, 9]);
    }

    #[test]
    fn paper_profile_sets_stated_hyperparameters() {
        let cfg = RunConfig::from_text("profile = paper\n").unwrap();
        assert_eq!(cfg.vae_hidden, 450);
        assert_eq!(cfg.vae_latent, 56);
        assert_eq!(cfg.vae_depth, 3);
        assert_eq!(cfg.surrogate.width, 256);
        assert_eq!(cfg.surrogate.depth, 8);
        assert_eq!(cfg.bo_iterations, 10);
        assert_eq!(cfg.bo_batch, 50);
        assert_eq!(cfg.dqn.max_steps, 40);
    }
}
