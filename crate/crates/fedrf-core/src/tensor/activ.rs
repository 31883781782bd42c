//! Gated activation: the channel dimension splits into a gate half and a
//! filter half, combined as sigmoid(gate) * tanh(filter).

use super::{Tensor2D, TensorError};
use crate::real::Real;

/// Saved activations from [`gated_forward`]; enough to run the backward pass
/// without re-evaluating any transcendental.
#[derive(Debug, Clone)]
pub struct GateCache<F> {
    /// sigmoid of the gate half, `[c x t]`
    pub sg: Tensor2D<F>,
    /// tanh of the filter half, `[c x t]`
    pub tv: Tensor2D<F>,
}

/// Forward pass. The first `c` channels of `z` are the gate, the last `c`
/// the filter.
pub fn gated_forward<F: Real>(z: &Tensor2D<F>) -> Result<(Tensor2D<F>, GateCache<F>), TensorError> {
    let c2 = z.channels();
    if c2 % 2 != 0 {
        return Err(TensorError::OddChannels(c2));
    }
    let c = c2 / 2;
    let t = z.time();
    let mut sg = Tensor2D::zeros(c, t);
    let mut tv = Tensor2D::zeros(c, t);
    let mut h = Tensor2D::zeros(c, t);
    let half = c * t;
    let zv = z.values();
    {
        let sgv = sg.values_mut();
        let tvv = tv.values_mut();
        let hv = h.values_mut();
        for i in 0..half {
            sgv[i] = zv[i].sigmoid();
        }
        for i in 0..half {
            tvv[i] = zv[half + i].tanh_gate();
        }
        for i in 0..half {
            hv[i] = sgv[i] * tvv[i];
        }
    }
    debug_assert!(h.is_finite());
    Ok((h, GateCache { sg, tv }))
}

/// Forward pass without keeping the cache.
pub fn gated_activation<F: Real>(z: &Tensor2D<F>) -> Result<Tensor2D<F>, TensorError> {
    gated_forward(z).map(|(h, _)| h)
}

/// Backward pass from cached activations. Returns the gradient with respect
/// to the stacked `[2c x t]` pre-activation.
pub fn gated_backward_cached<F: Real>(
    grad_h: &Tensor2D<F>,
    cache: &GateCache<F>,
) -> Result<Tensor2D<F>, TensorError> {
    let c = cache.sg.channels();
    let t = cache.sg.time();
    if grad_h.channels() != c || grad_h.time() != t {
        return Err(TensorError::ShapeMismatch(format!(
            "grad_h is {}x{}, cache is {c}x{t}",
            grad_h.channels(),
            grad_h.time()
        )));
    }
    let mut grad_z = Tensor2D::zeros(2 * c, t);
    let half = c * t;
    let gh = grad_h.values();
    let sg = cache.sg.values();
    let tv = cache.tv.values();
    let gz = grad_z.values_mut();
    let one = F::one();
    for i in 0..half {
        // d h / d gate = sg * (1 - sg) * tv
        gz[i] = gh[i] * sg[i] * (one - sg[i]) * tv[i];
    }
    for i in 0..half {
        // d h / d filter = sg * (1 - tv^2)
        gz[half + i] = gh[i] * sg[i] * (one - tv[i] * tv[i]);
    }
    Ok(grad_z)
}

/// Backward pass from the pre-activation (recomputes the cache).
pub fn gated_backward<F: Real>(
    grad_h: &Tensor2D<F>,
    z: &Tensor2D<F>,
) -> Result<Tensor2D<F>, TensorError> {
    let (_, cache) = gated_forward(z)?;
    gated_backward_cached(grad_h, &cache)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_map_to_zeros() {
        let z = Tensor2D::<f64>::zeros(2, 5);
        let h = gated_activation(&z).unwrap();
        assert!(h.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_gate_passes_filter() {
        let t = 4;
        let xs = [-1.5, -0.2, 0.3, 2.0];
        let mut z = Tensor2D::<f64>::zeros(2, t);
        for (i, &x) in xs.iter().enumerate() {
            z.set(0, i, 30.0);
            z.set(1, i, x);
        }
        let h = gated_activation(&z).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert!((h.at(0, i) - x.tanh()).abs() < 1e-9);
        }
    }

    #[test]
    fn odd_channel_count_rejected() {
        let z = Tensor2D::<f64>::zeros(3, 4);
        assert!(matches!(
            gated_activation(&z),
            Err(TensorError::OddChannels(3))
        ));
    }

    #[test]
    fn cached_and_recomputed_backward_agree() {
        let mut z = Tensor2D::<f64>::zeros(4, 3);
        for (i, v) in z.values_mut().iter_mut().enumerate() {
            *v = (i as f64 * 0.7).sin();
        }
        let mut gh = Tensor2D::<f64>::zeros(2, 3);
        for (i, v) in gh.values_mut().iter_mut().enumerate() {
            *v = 0.1 + i as f64 * 0.05;
        }
        let (_, cache) = gated_forward(&z).unwrap();
        let a = gated_backward_cached(&gh, &cache).unwrap();
        let b = gated_backward(&gh, &z).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
