//! Dense f64 tensors with tape-based reverse-mode automatic differentiation.
//!
//! Every value is 64-bit; a fixed seed and single-threaded execution make
//! training runs bit-reproducible. A [`Tape`] records one forward pass;
//! [`Tensor::backward`] walks it once in reverse and accumulates gradients
//! into the participating [`Parameter`]s. Shape mismatches are programming
//! errors and panic with both shapes in the message.

mod adam;
mod checkpoint;
pub mod gradcheck;
mod mlp;
pub mod ops;
mod rng;

pub use adam::{adam_step, AdamOptimizer, AdamParams, AdamState};
pub use checkpoint::{load_parameters, read_checkpoint, save_parameters, write_checkpoint, CheckpointEntry};
pub use mlp::{Activation, Mlp};
pub use rng::Rng;

use std::cell::{Cell, RefCell};
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("tensor is not attached to a tape")]
    DetachedGraph,
    #[error("tape already consumed by a previous backward call")]
    TapeConsumed,
    #[error("checkpoint error: {0}")]
    BadCheckpoint(String),
}

type GradCell = Rc<RefCell<Option<Vec<f64>>>>;

struct Node {
    out_grad: GradCell,
    back: Box<dyn Fn(&[f64])>,
}

struct TapeInner {
    nodes: RefCell<Vec<Node>>,
    consumed: Cell<bool>,
}

/// Records one forward pass for reverse-mode differentiation.
pub struct Tape {
    inner: Rc<TapeInner>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape { inner: Rc::new(TapeInner { nodes: RefCell::new(Vec::new()), consumed: Cell::new(false) }) }
    }

    /// Tracked view of a parameter; gradients flow into `param.grad`.
    pub fn leaf(&self, param: &Parameter) -> Tensor {
        let cell: GradCell = Rc::new(RefCell::new(None));
        let p = param.clone();
        self.inner.nodes.borrow_mut().push(Node {
            out_grad: cell.clone(),
            back: Box::new(move |g| p.accumulate_grad(g)),
        });
        Tensor {
            shape: param.shape().to_vec(),
            data: Rc::new(param.value().clone()),
            grad: Some(cell),
            tape: Some(self.inner.clone()),
        }
    }

    /// Tracked view of a plain tensor; its gradient is readable afterwards
    /// via [`Tensor::grad`]. Used for gradient checks and latent-space
    /// optimization.
    pub fn watch(&self, tensor: &Tensor) -> Tensor {
        let cell: GradCell = Rc::new(RefCell::new(None));
        self.inner.nodes.borrow_mut().push(Node {
            out_grad: cell.clone(),
            back: Box::new(|_| {}),
        });
        Tensor {
            shape: tensor.shape.clone(),
            data: tensor.data.clone(),
            grad: Some(cell),
            tape: Some(self.inner.clone()),
        }
    }

}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

/// Immutable dense tensor. Cloning shares the buffer.
#[derive(Clone)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Rc<Vec<f64>>,
    grad: Option<GradCell>,
    tape: Option<Rc<TapeInner>>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("tracked", &self.grad.is_some())
            .finish()
    }
}

impl Tensor {
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor { shape, data: Rc::new(data), grad: None, tape: None }
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor::from_vec(vec![1], vec![value])
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let n = shape.iter().product();
        Tensor::from_vec(shape, vec![0.0; n])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on non-scalar of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn is_tracked(&self) -> bool {
        self.grad.is_some()
    }

    /// Gradient accumulated by the last backward pass, if any.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.grad.as_ref().and_then(|c| c.borrow().clone())
    }

    /// Reverse accumulation from this scalar through the recorded tape.
    /// A second call on the same tape is an error; build a fresh tape per
    /// forward pass.
    pub fn backward(&self) -> Result<(), TensorError> {
        if self.numel() != 1 {
            return Err(TensorError::NotScalar(self.shape.clone()));
        }
        let tape = match (&self.tape, &self.grad) {
            (Some(t), Some(_)) => t.clone(),
            _ => return Err(TensorError::DetachedGraph),
        };
        if tape.consumed.get() {
            return Err(TensorError::TapeConsumed);
        }
        tape.consumed.set(true);
        *self.grad.as_ref().unwrap().borrow_mut() = Some(vec![1.0]);
        let nodes = tape.nodes.borrow();
        for node in nodes.iter().rev() {
            let grad = node.out_grad.borrow().clone();
            if let Some(g) = grad {
                (node.back)(&g);
            }
        }
        Ok(())
    }

    fn tape_of(inputs: &[&Tensor]) -> Option<Rc<TapeInner>> {
        inputs.iter().find_map(|t| t.tape.clone())
    }
}

fn accumulate(cell: &GradCell, grad: &[f64]) {
    let mut slot = cell.borrow_mut();
    match slot.as_mut() {
        Some(existing) => {
            for (e, g) in existing.iter_mut().zip(grad) {
                *e += g;
            }
        }
        None => *slot = Some(grad.to_vec()),
    }
}

/// Named trainable value with a persistent gradient buffer.
#[derive(Clone)]
pub struct Parameter(Rc<ParamInner>);

struct ParamInner {
    name: String,
    shape: Vec<usize>,
    value: RefCell<Vec<f64>>,
    grad: RefCell<Vec<f64>>,
    trainable: bool,
}

impl std::fmt::Debug for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Parameter")
            .field("name", &self.0.name)
            .field("shape", &self.0.shape)
            .finish()
    }
}

impl Parameter {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Parameter {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        let n = data.len();
        Parameter(Rc::new(ParamInner {
            name: name.into(),
            shape,
            value: RefCell::new(data),
            grad: RefCell::new(vec![0.0; n]),
            trainable: true,
        }))
    }

    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Parameter {
        let n = shape.iter().product();
        Parameter::new(name, shape, vec![0.0; n])
    }

    /// Non-trainable value that still rides along in checkpoints.
    pub fn frozen(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Parameter {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        let n = data.len();
        Parameter(Rc::new(ParamInner {
            name: name.into(),
            shape,
            value: RefCell::new(data),
            grad: RefCell::new(vec![0.0; n]),
            trainable: false,
        }))
    }

    /// Xavier-uniform initialization for a weight matrix.
    pub fn xavier(name: impl Into<String>, rows: usize, cols: usize, rng: &mut Rng) -> Parameter {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.range_f64(-bound, bound)).collect();
        Parameter::new(name, vec![rows, cols], data)
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn numel(&self) -> usize {
        self.0.shape.iter().product()
    }

    pub fn trainable(&self) -> bool {
        self.0.trainable
    }

    pub fn value(&self) -> std::cell::Ref<'_, Vec<f64>> {
        self.0.value.borrow()
    }

    pub fn set_value(&self, data: Vec<f64>) {
        assert_eq!(data.len(), self.numel(), "parameter {} size mismatch", self.0.name);
        *self.0.value.borrow_mut() = data;
    }

    pub fn grad(&self) -> std::cell::Ref<'_, Vec<f64>> {
        self.0.grad.borrow()
    }

    pub fn zero_grad(&self) {
        self.0.grad.borrow_mut().iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn zero_value(&self) {
        self.0.value.borrow_mut().iter_mut().for_each(|v| *v = 0.0);
    }

    fn accumulate_grad(&self, grad: &[f64]) {
        let mut g = self.0.grad.borrow_mut();
        for (slot, add) in g.iter_mut().zip(grad) {
            *slot += add;
        }
    }
}

/// Zeroes the gradient buffers of every parameter.
pub fn zero_grads(params: &[Parameter]) {
    for p in params {
        p.zero_grad();
    }
}

/// Panics when any two parameters share a name; models call this once at
/// construction.
pub fn check_unique_names(params: &[Parameter]) {
    let mut names: Vec<&str> = params.iter().map(|p| p.name()).collect();
    names.sort_unstable();
    for pair in names.windows(2) {
        assert_ne!(pair[0], pair[1], "duplicate parameter name {}", pair[0]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ops::*;

    #[test]
    fn backward_on_non_scalar_fails() {
        let tape = Tape::new();
        let p = Parameter::new("w", vec![2], vec![1.0, 2.0]);
        let x = tape.leaf(&p);
        assert!(matches!(x.backward(), Err(TensorError::NotScalar(_))));
    }

    #[test]
    fn backward_on_detached_fails() {
        let x = Tensor::scalar(3.0);
        assert!(matches!(x.backward(), Err(TensorError::DetachedGraph)));
    }

    #[test]
    fn second_backward_without_reset_fails() {
        let tape = Tape::new();
        let p = Parameter::new("w", vec![1], vec![3.0]);
        let x = tape.leaf(&p);
        let y = mul(&x, &x);
        y.backward().unwrap();
        assert!((p.grad()[0] - 6.0).abs() < 1e-12, "d(x^2)/dx at 3");
        assert!(matches!(y.backward(), Err(TensorError::TapeConsumed)));
    }

    #[test]
    fn gradient_accumulates_across_uses() {
        let tape = Tape::new();
        let p = Parameter::new("w", vec![1], vec![2.0]);
        let x = tape.leaf(&p);
        let y = add(&mul(&x, &x), &x); // x^2 + x
        y.backward().unwrap();
        assert!((p.grad()[0] - 5.0).abs() < 1e-12);
    }
}
