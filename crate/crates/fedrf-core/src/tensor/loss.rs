//! Mean-squared-error loss with its input gradient.

use super::{Tensor2D, TensorError};
use crate::real::Real;

/// `loss = mean((pred - target)^2)` over all elements, plus
/// `d loss / d pred = (2/N) * (pred - target)`.
///
/// The scalar reduction accumulates in f64 regardless of `F` so long frames
/// do not lose the low-order bits of the loss value.
pub fn mse_loss<F: Real>(
    pred: &Tensor2D<F>,
    target: &Tensor2D<F>,
) -> Result<(F, Tensor2D<F>), TensorError> {
    if pred.channels() != target.channels() || pred.time() != target.time() {
        return Err(TensorError::ShapeMismatch(format!(
            "pred is {}x{}, target is {}x{}",
            pred.channels(),
            pred.time(),
            target.channels(),
            target.time()
        )));
    }
    let n = pred.numel();
    let scale = F::from_f64(2.0 / n as f64);
    let mut grad = Tensor2D::zeros(pred.channels(), pred.time());
    let mut acc = 0.0f64;
    {
        let gv = grad.values_mut();
        let pv = pred.values();
        let tv = target.values();
        for i in 0..n {
            let d = pv[i] - tv[i];
            acc += d.as_f64() * d.as_f64();
            gv[i] = scale * d;
        }
    }
    Ok((F::from_f64(acc / n as f64), grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_at_match() {
        let a = Tensor2D::from_rows(&[vec![1.0, -2.0, 3.0]]);
        let (loss, grad) = mse_loss(&a, &a).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn unit_residual() {
        let p = Tensor2D::from_rows(&[vec![1.0, 1.0]]);
        let t = Tensor2D::from_rows(&[vec![0.0, 0.0]]);
        let (loss, grad) = mse_loss(&p, &t).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(grad.values(), &[1.0, 1.0]);
    }

    #[test]
    fn quadratic_homogeneity() {
        let p = Tensor2D::from_rows(&[vec![0.3, -1.2, 0.7, 2.0]]);
        let z = Tensor2D::<f64>::zeros(1, 4);
        let (l1, _) = mse_loss(&p, &z).unwrap();
        let p2 = Tensor2D::from_rows(&[vec![0.6, -2.4, 1.4, 4.0]]);
        let (l2, _) = mse_loss(&p2, &z).unwrap();
        assert!((l2 - 4.0 * l1).abs() < 1e-12);
    }

    #[test]
    fn shape_guard() {
        let p = Tensor2D::<f32>::zeros(1, 3);
        let t = Tensor2D::<f32>::zeros(1, 4);
        assert!(mse_loss(&p, &t).is_err());
    }
}
