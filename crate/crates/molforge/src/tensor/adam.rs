//! Adam parameter updates. The functional core takes explicit state so runs
//! are reproducible; the optimizer wrapper applies it across a parameter
//! list using the gradients accumulated by backward.

use super::Parameter;

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> AdamParams {
        AdamParams { lr, ..Default::default() }
    }
}

/// First/second moment buffers plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> AdamState {
        AdamState { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }
}

/// One Adam update. Returns the new values; `state` advances in place.
pub fn adam_step(value: &[f64], grad: &[f64], state: &mut AdamState, hp: &AdamParams) -> Vec<f64> {
    assert_eq!(
        value.len(),
        grad.len(),
        "shape mismatch in adam_step: [{}] vs [{}]",
        value.len(),
        grad.len()
    );
    assert_eq!(value.len(), state.m.len(), "adam state length mismatch");
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - hp.beta1.powi(t);
    let bc2 = 1.0 - hp.beta2.powi(t);
    let mut out = Vec::with_capacity(value.len());
    for i in 0..value.len() {
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grad[i];
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        out.push(value[i] - hp.lr * m_hat / (v_hat.sqrt() + hp.eps));
    }
    out
}

/// Applies Adam across a fixed parameter list.
pub struct AdamOptimizer {
    hp: AdamParams,
    states: Vec<AdamState>,
}

impl AdamOptimizer {
    pub fn new(params: &[Parameter], hp: AdamParams) -> AdamOptimizer {
        let states = params.iter().map(|p| AdamState::new(p.numel())).collect();
        AdamOptimizer { hp, states }
    }

    /// Updates every trainable parameter from its accumulated gradient and
    /// clears the gradients.
    pub fn step(&mut self, params: &[Parameter]) {
        assert_eq!(params.len(), self.states.len(), "optimizer built for a different list");
        for (p, state) in params.iter().zip(&mut self.states) {
            if !p.trainable() {
                continue;
            }
            let next = adam_step(&p.value(), &p.grad(), state, &self.hp);
            p.set_value(next);
            p.zero_grad();
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.hp.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_values_unchanged() {
        let mut state = AdamState::new(3);
        let value = vec![1.0, -2.0, 0.5];
        let out = adam_step(&value, &[0.0, 0.0, 0.0], &mut state, &AdamParams::default());
        assert_eq!(out, value);
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let run = || {
            let mut state = AdamState::new(2);
            let mut value = vec![5.0, -3.0];
            for step in 0..50 {
                let grad = vec![2.0 * value[0] + step as f64 * 0.01, 2.0 * value[1]];
                value = adam_step(&value, &grad, &mut state, &AdamParams::with_lr(0.05));
            }
            value
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut state = AdamState::new(2);
        let mut value = vec![3.0, -4.0];
        for _ in 0..500 {
            let grad = vec![2.0 * value[0], 2.0 * value[1]];
            value = adam_step(&value, &grad, &mut state, &AdamParams::with_lr(0.05));
        }
        assert!(value.iter().all(|v| v.abs() < 1e-3), "got {value:?}");
    }

    #[test]
    fn length_mismatch_panics() {
        let mut state = AdamState::new(2);
        let err = std::panic::catch_unwind(std::panic::AssertUnwindSafe(move || {
            adam_step(&[1.0, 2.0], &[1.0], &mut state, &AdamParams::default())
        }))
        .unwrap_err();
        let msg = err.downcast_ref::<String>().cloned().unwrap_or_default();
        assert!(msg.contains("[2]") && msg.contains("[1]"), "message: {msg}");
    }
}
