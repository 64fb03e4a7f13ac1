//! Multi-layer perceptron built from the op set: dense layers with a chosen
//! hidden activation and a linear output layer.

use super::ops::{add_row, matmul, relu, sigmoid};
use super::{Parameter, Rng, Tape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    fn apply(&self, x: &Tensor) -> Tensor {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => relu(x),
        }
    }
}

/// Dense network; `dims = [in, h1, ..., out]`.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub weights: Vec<Parameter>,
    pub biases: Vec<Parameter>,
    activation: Activation,
}

impl Mlp {
    pub fn new(name: &str, dims: &[usize], activation: Activation, rng: &mut Rng) -> Mlp {
        assert!(dims.len() >= 2, "mlp needs at least input and output dims");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for layer in 0..dims.len() - 1 {
            weights.push(Parameter::xavier(
                format!("{name}.w{layer}"),
                dims[layer],
                dims[layer + 1],
                rng,
            ));
            biases.push(Parameter::zeros(format!("{name}.b{layer}"), vec![dims[layer + 1]]));
        }
        Mlp { weights, biases, activation }
    }

    /// Forward over rows of `x` `[n, in] -> [n, out]`. Hidden layers use the
    /// configured activation; the output layer is linear.
    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Tensor {
        let mut h = x.clone();
        let last = self.weights.len() - 1;
        for (layer, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            h = add_row(&matmul(&h, &tape.leaf(w)), &tape.leaf(b));
            if layer < last {
                h = self.activation.apply(&h);
            }
        }
        h
    }

    /// Untracked forward for inference.
    pub fn infer(&self, x: &Tensor) -> Tensor {
        let mut h = x.clone();
        let last = self.weights.len() - 1;
        for (layer, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let wt = Tensor::from_vec(w.shape().to_vec(), w.value().clone());
            let bt = Tensor::from_vec(b.shape().to_vec(), b.value().clone());
            h = add_row(&matmul(&h, &wt), &bt);
            if layer < last {
                h = self.activation.apply(&h);
            }
        }
        h
    }

    pub fn params(&self) -> Vec<Parameter> {
        self.weights.iter().chain(&self.biases).cloned().collect()
    }

    /// Zeroes every weight and bias (used to verify residual identities).
    pub fn zero_all(&self) {
        for p in self.params() {
            p.zero_value();
        }
    }

    /// Copies values from another identically-shaped network.
    pub fn copy_from(&self, other: &Mlp) {
        for (dst, src) in self.params().iter().zip(other.params()) {
            dst.set_value(src.value().clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ops::sum;

    #[test]
    fn forward_shape_and_grads_flow() {
        let mut rng = Rng::seed_from(1);
        let mlp = Mlp::new("t", &[4, 8, 2], Activation::Sigmoid, &mut rng);
        let tape = Tape::new();
        let x = Tensor::from_vec(vec![3, 4], (0..12).map(|i| i as f64 * 0.1).collect());
        let y = mlp.forward(&tape, &x);
        assert_eq!(y.shape(), &[3, 2]);
        sum(&y).backward().unwrap();
        for p in mlp.params() {
            assert!(p.grad().iter().any(|&g| g != 0.0), "no gradient on {}", p.name());
        }
    }

    #[test]
    fn zeroed_network_outputs_zero() {
        let mut rng = Rng::seed_from(2);
        let mlp = Mlp::new("t", &[3, 5, 1], Activation::Sigmoid, &mut rng);
        mlp.zero_all();
        let x = Tensor::from_vec(vec![2, 3], vec![1.0; 6]);
        let y = mlp.infer(&x);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }
}
