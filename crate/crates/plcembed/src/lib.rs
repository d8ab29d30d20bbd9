//! Raw-byte classification of PLC executables.
//!
//! The pipeline ingests a compiled PLC binary as an opaque byte sequence and
//! predicts either the producing toolchain (4 classes) or a functionality
//! category. The model is a byte embedding followed by a strided 1-D
//! convolution, an optional transformer encoder, masked mean pooling, and a
//! softmax head; a CNN-only variant omits the encoder. All differentiable
//! kernels ship with hand-written backward passes validated against central
//! finite differences.
//!
//! Modules:
//! - [`corpus`]: dataset index, byte encoding, program-level splits, class weights
//! - [`synthgen`]: synthetic multi-dialect corpus generator
//! - [`ndops`]: differentiable numeric kernels (forward + backward)
//! - [`model`]: architecture assembly, prediction, checkpoints
//! - [`trainer`]: mini-batch training with early stopping
//! - [`eval`]: confusion matrix, metrics, byte-corruption robustness
//!
//! Numeric code is generic over the scalar type via [`scalar::Scalar`];
//! `f64` is used by the verification suites, `f32` for training throughput.

pub mod corpus;
pub mod eval;
pub mod model;
pub mod ndops;
pub mod rng;
pub mod scalar;
pub mod synthgen;
pub mod tensor;
pub mod trainer;

pub use scalar::Scalar;
pub use tensor::Tensor;

/// Single-precision tensor, the training default.
pub type Tensor32 = Tensor<f32>;
/// Double-precision tensor, used by the gradient-check suites.
pub type Tensor64 = Tensor<f64>;

/// Single-precision parameter set, the training default.
pub type ModelParams32 = model::ModelParams<f32>;
/// Double-precision parameter set, used by the gradient-check suites.
pub type ModelParams64 = model::ModelParams<f64>;
