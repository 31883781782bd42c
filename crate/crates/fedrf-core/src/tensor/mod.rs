//! Minimal differentiable kernel for fixed-architecture 1-D conv nets.
//!
//! Everything here is deterministic: loops run in a fixed order, reductions
//! use a fixed lane structure, and no op keeps hidden state. Ops either
//! return fresh tensors or mutate only the parameters passed to them.

mod activ;
mod adam;
mod conv;
mod gradcheck;
mod loss;

pub use activ::{gated_activation, gated_backward, gated_backward_cached, gated_forward, GateCache};
pub use adam::{adam_step, AdamState};
pub use conv::{conv1d_backward, conv1d_forward};
pub use gradcheck::{grad_check, grad_check_sampled};
pub use loss::mse_loss;

use crate::real::Real;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dilation span {span} must be smaller than time length {time}")]
    DilationSpan { span: usize, time: usize },
    #[error("gated activation needs an even channel count, got {0}")]
    OddChannels(usize),
    #[error("kernel size must be odd, got {0}")]
    EvenKernel(usize),
    #[error("optimizer step on non-trainable parameter '{0}'")]
    NotTrainable(String),
    #[error("empty batch")]
    EmptyBatch,
}

/// Dense `[channels x time]` activation array, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2D<F> {
    channels: usize,
    time: usize,
    values: Vec<F>,
}

impl<F: Real> Tensor2D<F> {
    pub fn zeros(channels: usize, time: usize) -> Self {
        assert!(channels > 0 && time > 0, "tensor dims must be positive");
        Self {
            channels,
            time,
            values: vec![F::zero(); channels * time],
        }
    }

    pub fn from_values(channels: usize, time: usize, values: Vec<F>) -> Result<Self, TensorError> {
        if values.len() != channels * time {
            return Err(TensorError::ShapeMismatch(format!(
                "expected {} values for {channels}x{time}, got {}",
                channels * time,
                values.len()
            )));
        }
        Ok(Self {
            channels,
            time,
            values,
        })
    }

    /// Convenience constructor from per-channel rows (used heavily in tests).
    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty());
        let time = rows[0].len();
        let mut values = Vec::with_capacity(rows.len() * time);
        for r in rows {
            assert_eq!(r.len(), time, "ragged rows");
            values.extend_from_slice(r);
        }
        Self {
            channels: rows.len(),
            time,
            values,
        }
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }
    #[inline]
    pub fn time(&self) -> usize {
        self.time
    }
    #[inline]
    pub fn numel(&self) -> usize {
        self.values.len()
    }
    #[inline]
    pub fn values(&self) -> &[F] {
        &self.values
    }
    #[inline]
    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }
    #[inline]
    pub fn row(&self, c: usize) -> &[F] {
        &self.values[c * self.time..(c + 1) * self.time]
    }
    #[inline]
    pub fn row_mut(&mut self, c: usize) -> &mut [F] {
        &mut self.values[c * self.time..(c + 1) * self.time]
    }
    #[inline]
    pub fn at(&self, c: usize, t: usize) -> F {
        debug_assert!(c < self.channels && t < self.time);
        self.values[c * self.time + t]
    }
    #[inline]
    pub fn set(&mut self, c: usize, t: usize, v: F) {
        debug_assert!(c < self.channels && t < self.time);
        self.values[c * self.time + t] = v;
    }

    /// Rows `[lo, hi)` as a borrowed sub-view (contiguous in this layout).
    #[inline]
    pub fn rows(&self, lo: usize, hi: usize) -> &[F] {
        &self.values[lo * self.time..hi * self.time]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map_to<G: Real>(&self) -> Tensor2D<G> {
        Tensor2D {
            channels: self.channels,
            time: self.time,
            values: self.values.iter().map(|v| G::from_f64(v.as_f64())).collect(),
        }
    }
}

/// Trainable (or frozen) weight tensor with its gradient buffer.
#[derive(Debug, Clone)]
pub struct Parameter<F> {
    name: String,
    shape: Vec<usize>,
    values: Vec<F>,
    grad: Vec<F>,
    trainable: bool,
}

impl<F: Real> Parameter<F> {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<F>) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(numel, values.len(), "shape/value length mismatch");
        Self {
            name: name.into(),
            shape,
            grad: vec![F::zero(); values.len()],
            values,
            trainable: true,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let numel: usize = shape.iter().product();
        Self::new(name, shape, vec![F::zero(); numel])
    }

    #[inline]
    pub fn name(&self) -> &str {
        &self.name
    }
    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    #[inline]
    pub fn numel(&self) -> usize {
        self.values.len()
    }
    #[inline]
    pub fn values(&self) -> &[F] {
        &self.values
    }
    #[inline]
    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }
    #[inline]
    pub fn grad(&self) -> &[F] {
        &self.grad
    }
    #[inline]
    pub fn grad_mut(&mut self) -> &mut [F] {
        &mut self.grad
    }
    #[inline]
    pub fn trainable(&self) -> bool {
        self.trainable
    }
    pub fn set_trainable(&mut self, trainable: bool) {
        self.trainable = trainable;
        if !trainable {
            self.zero_grad();
        }
    }
    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = F::zero());
    }

    pub fn map_to<G: Real>(&self) -> Parameter<G> {
        Parameter {
            name: self.name.clone(),
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| G::from_f64(v.as_f64())).collect(),
            grad: self.grad.iter().map(|v| G::from_f64(v.as_f64())).collect(),
            trainable: self.trainable,
        }
    }
}

pub(crate) const LANES: usize = 16;

/// Folds a lane bank in a fixed tree; keeping the order fixed keeps results
/// identical between runs.
#[inline]
pub(crate) fn fold_lanes<F: Real>(acc: &[F; LANES]) -> F {
    let q0 = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    let q1 = ((acc[8] + acc[9]) + (acc[10] + acc[11])) + ((acc[12] + acc[13]) + (acc[14] + acc[15]));
    q0 + q1
}

/// Fixed-lane dot product: independent accumulator lanes so the loop
/// vectorizes without changing the summation order between runs.
#[inline]
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::zero(); LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for j in 0..LANES {
            acc[j] += xa[j] * xb[j];
        }
    }
    for (j, (&xa, &xb)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        acc[j] += xa * xb;
    }
    fold_lanes(&acc)
}

/// Fixed-lane sum, same structure as [`dot`].
#[inline]
pub(crate) fn sum<F: Real>(a: &[F]) -> F {
    let mut acc = [F::zero(); LANES];
    let mut ca = a.chunks_exact(LANES);
    for xa in &mut ca {
        for j in 0..LANES {
            acc[j] += xa[j];
        }
    }
    for (j, &xa) in ca.remainder().iter().enumerate() {
        acc[j] += xa;
    }
    fold_lanes(&acc)
}
