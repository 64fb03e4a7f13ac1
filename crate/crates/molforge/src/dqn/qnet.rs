//! Action-value network: a four-hidden-layer MLP over the fingerprint of
//! the molecule an action would produce, concatenated with the normalized
//! steps-remaining scalar.

use crate::fingerprint::Fingerprint;
use crate::tensor::{Activation, Mlp, Parameter, Rng, Tape, Tensor};

pub struct QNetwork {
    pub mlp: Mlp,
    pub fp_width: usize,
    pub max_steps: u32,
}

impl QNetwork {
    pub fn new(name: &str, fp_width: usize, hidden: &[usize], max_steps: u32, rng: &mut Rng) -> QNetwork {
        let mut dims = vec![fp_width + 1];
        dims.extend_from_slice(hidden);
        dims.push(1);
        QNetwork { mlp: Mlp::new(name, &dims, Activation::Relu, rng), fp_width, max_steps }
    }

    /// Input row: fingerprint bits then steps-remaining scaled to [0,1].
    pub fn input_matrix(&self, fps: &[&Fingerprint], steps_remaining: f64) -> Tensor {
        let w = self.fp_width + 1;
        let mut data = Vec::with_capacity(fps.len() * w);
        for fp in fps {
            assert_eq!(fp.width(), self.fp_width, "fingerprint width mismatch");
            data.extend(fp.to_f64_vec());
            data.push(steps_remaining / self.max_steps as f64);
        }
        Tensor::from_vec(vec![fps.len(), w], data)
    }

    /// Untracked values for a batch of candidate fingerprints.
    pub fn values(&self, fps: &[&Fingerprint], steps_remaining: f64) -> Vec<f64> {
        if fps.is_empty() {
            return Vec::new();
        }
        let x = self.input_matrix(fps, steps_remaining);
        self.mlp.infer(&x).data().to_vec()
    }

    /// Tracked forward for training.
    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Tensor {
        self.mlp.forward(tape, x)
    }

    pub fn params(&self) -> Vec<Parameter> {
        self.mlp.params()
    }

    pub fn copy_from(&self, other: &QNetwork) {
        self.mlp.copy_from(&other.mlp);
    }
}
