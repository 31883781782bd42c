//! Federated interference-suppression testbed: a from-scratch differentiable
//! temporal-conv separator, an OFDM/QPSK baseband chain with synthetic
//! interference, low-rank and FiLM adapters, and federated averaging over
//! adapter vectors.

pub mod real;
pub mod tensor;
pub mod util;

pub use real::Real;
pub use tensor::{Parameter, Tensor2D, TensorError};
