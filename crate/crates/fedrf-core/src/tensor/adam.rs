//! Adam optimizer with bias correction, one state per parameter.

use super::{Parameter, TensorError};
use crate::real::Real;

#[derive(Debug, Clone)]
pub struct AdamState<F> {
    m: Vec<F>,
    v: Vec<F>,
    step: u64,
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
}

impl<F: Real> AdamState<F> {
    /// Fresh state with the usual (0.9, 0.999, 1e-8) moment defaults.
    pub fn new(len: usize, lr: F) -> Self {
        Self {
            m: vec![F::zero(); len],
            v: vec![F::zero(); len],
            step: 0,
            lr,
            beta1: F::from_f64(0.9),
            beta2: F::from_f64(0.999),
            eps: F::from_f64(1e-8),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// One Adam update from the accumulated gradient; zeroes the gradient buffer
/// afterwards. Refuses to touch frozen parameters.
pub fn adam_step<F: Real>(param: &mut Parameter<F>, state: &mut AdamState<F>) -> Result<(), TensorError> {
    if !param.trainable() {
        return Err(TensorError::NotTrainable(param.name().to_string()));
    }
    if state.m.len() != param.numel() {
        return Err(TensorError::ShapeMismatch(format!(
            "optimizer state has {} slots, parameter '{}' has {}",
            state.m.len(),
            param.name(),
            param.numel()
        )));
    }
    state.step += 1;
    let one = F::one();
    let bc1 = one - state.beta1.powi(state.step as i32);
    let bc2 = one - state.beta2.powi(state.step as i32);
    let (b1, b2) = (state.beta1, state.beta2);
    let (lr, eps) = (state.lr, state.eps);

    let n = param.numel();
    // split borrows: values and grad live in the same struct
    for i in 0..n {
        let g = param.grad()[i];
        let m = b1 * state.m[i] + (one - b1) * g;
        let v = b2 * state.v[i] + (one - b2) * g * g;
        state.m[i] = m;
        state.v[i] = v;
        let update = lr * (m / bc1) / ((v / bc2).sqrt() + eps);
        param.values_mut()[i] -= update;
    }
    param.zero_grad();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_leaves_param() {
        let mut p = Parameter::new("w", vec![3], vec![1.0f64, -2.0, 0.5]);
        let mut s = AdamState::new(3, 0.1);
        adam_step(&mut p, &mut s).unwrap();
        assert_eq!(p.values(), &[1.0, -2.0, 0.5]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Parameter::new("w", vec![1], vec![0.0f64]);
        p.grad_mut()[0] = 1.0;
        let mut s = AdamState::new(1, 0.1);
        adam_step(&mut p, &mut s).unwrap();
        assert!((p.values()[0] + 0.1).abs() < 1e-6);
        assert_eq!(p.grad(), &[0.0]); // cleared after the step
    }

    #[test]
    fn constant_gradient_is_monotone() {
        let mut p = Parameter::new("w", vec![1], vec![0.0f64]);
        let mut s = AdamState::new(1, 0.01);
        let mut prev = 0.0;
        for _ in 0..1000 {
            p.grad_mut()[0] = 1.0;
            adam_step(&mut p, &mut s).unwrap();
            assert!(p.values()[0] < prev);
            prev = p.values()[0];
        }
    }

    #[test]
    fn frozen_param_is_rejected() {
        let mut p = Parameter::new("w", vec![1], vec![0.0f64]);
        p.set_trainable(false);
        let mut s = AdamState::new(1, 0.1);
        assert!(matches!(
            adam_step(&mut p, &mut s),
            Err(TensorError::NotTrainable(_))
        ));
    }
}
