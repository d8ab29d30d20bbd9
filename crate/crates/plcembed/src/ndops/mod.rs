//! Differentiable numeric kernels.
//!
//! Every layer the model needs, as pure functions: forward passes take tensor
//! references and return outputs plus whatever cache the paired backward pass
//! requires. Backward passes accumulate into caller-provided gradient tensors
//! so one parameter set can serve a whole batch. No tape, no graph — the model
//! module composes these by hand in both directions.
//!
//! All kernels are generic over [`crate::Scalar`]; the finite-difference
//! harness in [`gradcheck`] runs them in `f64`.

pub mod activation;
pub mod attention;
pub mod conv;
pub mod embedding;
pub mod ffn;
pub mod gradcheck;
pub mod head;
pub mod linalg;
pub mod norm;
pub mod pool;

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Kernel-level failure. Shape checks run once per call, before any math.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OpError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("token {token} at position {index} outside vocabulary")]
    TokenOutOfRange { index: usize, token: u16 },
    #[error("operation requires at least one unmasked position")]
    AllMasked,
}

pub(crate) fn shape_err(op: &'static str, detail: String) -> OpError {
    OpError::ShapeMismatch { op, detail }
}

/// A learnable tensor with its gradient accumulator.
///
/// `grad` always has `value`'s shape and is zeroed at the start of each
/// accumulation scope (one optimizer step).
#[derive(Clone, Debug)]
pub struct Parameter<T> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub name: String,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape().to_vec());
        Parameter {
            value,
            grad,
            name: name.into(),
        }
    }

    pub fn zero_grad(&mut self) {
        for g in self.grad.data_mut() {
            *g = T::zero();
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.len() == 0
    }
}
