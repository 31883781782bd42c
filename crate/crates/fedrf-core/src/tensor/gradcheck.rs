//! Central finite-difference check for analytic gradients.
//!
//! Runs on f64 closures; callers move their model to f64 with `map_to` and
//! wrap a scalar loss around the coordinate vector.

/// Max over all coordinates of the relative disagreement between `analytic`
/// and the central difference of `f` at `x0`.
///
/// Error metric: `|analytic - fd| / max(1, |analytic|)`.
pub fn grad_check<Func>(f: Func, x0: &[f64], analytic: &[f64], eps: f64) -> f64
where
    Func: FnMut(&[f64]) -> f64,
{
    let coords: Vec<usize> = (0..x0.len()).collect();
    grad_check_sampled(f, x0, analytic, eps, &coords)
}

/// Same as [`grad_check`] but only over the given coordinates, for large
/// parameter vectors.
pub fn grad_check_sampled<Func>(
    mut f: Func,
    x0: &[f64],
    analytic: &[f64],
    eps: f64,
    coords: &[usize],
) -> f64
where
    Func: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), analytic.len());
    let mut x = x0.to_vec();
    let mut worst = 0.0f64;
    for &i in coords {
        let saved = x[i];
        x[i] = saved + eps;
        let up = f(&x);
        x[i] = saved - eps;
        let down = f(&x);
        x[i] = saved;
        let fd = (up - down) / (2.0 * eps);
        let err = (analytic[i] - fd).abs() / analytic[i].abs().max(1.0);
        if err > worst {
            worst = err;
        }
    }
    worst
}
