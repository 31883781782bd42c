//! Dilated 1-D convolution, forward and reverse mode.
//!
//! Padding is symmetric zero "same" padding: output length equals input
//! length and out-of-range taps read zero. Kernels must have odd length so
//! the padding splits evenly.

use super::{dot, fold_lanes, sum, Parameter, Tensor2D, TensorError, LANES};
use crate::real::Real;

fn conv_dims<F: Real>(weight: &Parameter<F>) -> Result<(usize, usize, usize), TensorError> {
    match *weight.shape() {
        [c_out, c_in, k] => Ok((c_out, c_in, k)),
        ref s => Err(TensorError::ShapeMismatch(format!(
            "conv weight '{}' must be [c_out, c_in, k], got {s:?}",
            weight.name()
        ))),
    }
}

fn check_geometry<F: Real>(
    x: &Tensor2D<F>,
    weight: &Parameter<F>,
    bias: Option<&Parameter<F>>,
    dilation: usize,
) -> Result<(usize, usize, usize), TensorError> {
    let (c_out, c_in, k) = conv_dims(weight)?;
    if k % 2 == 0 {
        return Err(TensorError::EvenKernel(k));
    }
    if x.channels() != c_in {
        return Err(TensorError::ShapeMismatch(format!(
            "input has {} channels, weight '{}' expects {c_in}",
            x.channels(),
            weight.name()
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [c_out] {
            return Err(TensorError::ShapeMismatch(format!(
                "bias '{}' must be [{c_out}], got {:?}",
                b.name(),
                b.shape()
            )));
        }
    }
    assert!(dilation > 0, "dilation must be positive");
    let span = dilation * (k - 1);
    if span >= x.time() {
        return Err(TensorError::DilationSpan {
            span,
            time: x.time(),
        });
    }
    Ok((c_out, c_in, k))
}

/// `y[t] += w * x[t + off]` over the in-range part of `t`.
#[inline]
fn axpy_shifted<F: Real>(y: &mut [F], x: &[F], w: F, off: isize) {
    let t = y.len();
    if off >= 0 {
        let o = off as usize;
        if o >= t {
            return;
        }
        for (yv, &xv) in y[..t - o].iter_mut().zip(&x[o..]) {
            *yv = w.mul_add(xv, *yv);
        }
    } else {
        let o = (-off) as usize;
        if o >= t {
            return;
        }
        for (yv, &xv) in y[o..].iter_mut().zip(&x[..t - o]) {
            *yv = w.mul_add(xv, *yv);
        }
    }
}

/// Fused three-tap stencil `y[t] += w0*x[t-d] + w1*x[t] + w2*x[t+d]`.
///
/// The interior runs as one vectorizable pass of fused multiply-adds; the
/// caller guarantees `2d < len` (the dilation-span precondition).
#[inline]
fn stencil3<F: Real>(y: &mut [F], x: &[F], w0: F, w1: F, w2: F, d: usize) {
    let t = y.len();
    debug_assert!(2 * d < t);
    for i in 0..d {
        y[i] = w2.mul_add(x[i + d], w1.mul_add(x[i], y[i]));
    }
    let n = t - 2 * d;
    {
        let (xa, xb, xc) = (&x[..n], &x[d..d + n], &x[2 * d..]);
        let ym = &mut y[d..d + n];
        for i in 0..n {
            ym[i] = w2.mul_add(xc[i], w1.mul_add(xb[i], w0.mul_add(xa[i], ym[i])));
        }
    }
    for i in t - d..t {
        y[i] = w1.mul_add(x[i], w0.mul_add(x[i - d], y[i]));
    }
}

/// Two-row variant of [`stencil3`]: both output rows consume the same input
/// row, so the three shifted loads are shared and the FMA chains interleave.
/// Element-for-element the arithmetic matches [`stencil3`].
#[inline]
fn stencil3_pair<F: Real>(y0: &mut [F], y1: &mut [F], x: &[F], wa: [F; 3], wb: [F; 3], d: usize) {
    let t = y0.len();
    debug_assert!(2 * d < t);
    let (wa0, wa1, wa2) = (wa[0], wa[1], wa[2]);
    let (wb0, wb1, wb2) = (wb[0], wb[1], wb[2]);
    for i in 0..d {
        y0[i] = wa2.mul_add(x[i + d], wa1.mul_add(x[i], y0[i]));
        y1[i] = wb2.mul_add(x[i + d], wb1.mul_add(x[i], y1[i]));
    }
    let n = t - 2 * d;
    {
        let (xa, xb, xc) = (&x[..n], &x[d..d + n], &x[2 * d..2 * d + n]);
        let y0m = &mut y0[d..d + n];
        let y1m = &mut y1[d..d + n];
        for i in 0..n {
            let (a, b, c) = (xa[i], xb[i], xc[i]);
            y0m[i] = wa2.mul_add(c, wa1.mul_add(b, wa0.mul_add(a, y0m[i])));
            y1m[i] = wb2.mul_add(c, wb1.mul_add(b, wb0.mul_add(a, y1m[i])));
        }
    }
    for i in t - d..t {
        y0[i] = wa1.mul_add(x[i], wa0.mul_add(x[i - d], y0[i]));
        y1[i] = wb1.mul_add(x[i], wb0.mul_add(x[i - d], y1[i]));
    }
}

/// Two-row pointwise accumulate sharing one input row.
#[inline]
fn axpy_pair<F: Real>(y0: &mut [F], y1: &mut [F], x: &[F], w0: F, w1: F) {
    for ((v0, v1), &xv) in y0.iter_mut().zip(y1.iter_mut()).zip(x) {
        *v0 = w0.mul_add(xv, *v0);
        *v1 = w1.mul_add(xv, *v1);
    }
}

/// Mutable views of two distinct rows of a tensor.
#[inline]
fn two_rows_mut<F: Real>(t: &mut Tensor2D<F>, a: usize, b: usize) -> (&mut [F], &mut [F]) {
    debug_assert!(a < b);
    let time = t.time();
    let (lo, hi) = t.values_mut().split_at_mut(b * time);
    (&mut lo[a * time..(a + 1) * time], &mut hi[..time])
}

/// `sum_t a[t] * b[t + off]` over the in-range part of `t`.
#[inline]
fn shifted_dot<F: Real>(a: &[F], b: &[F], off: isize) -> F {
    let t = a.len();
    if off >= 0 {
        let o = off as usize;
        if o >= t {
            return F::zero();
        }
        dot(&a[..t - o], &b[o..])
    } else {
        let o = (-off) as usize;
        if o >= t {
            return F::zero();
        }
        dot(&a[o..], &b[..t - o])
    }
}

/// Weight gradient for a three-tap row pair in a single pass:
/// `(sum_t gy[t]*x[t-d], sum_t gy[t]*x[t], sum_t gy[t]*x[t+d])`.
///
/// Shares one read of `gy` across the three reductions; edges accumulate
/// after the lane fold in a fixed order.
#[inline]
fn grad_w3<F: Real>(gy: &[F], x: &[F], d: usize) -> (F, F, F) {
    let t = gy.len();
    debug_assert!(2 * d < t);
    let n = t - 2 * d;
    let mut a0 = [F::zero(); LANES];
    let mut a1 = [F::zero(); LANES];
    let mut a2 = [F::zero(); LANES];
    {
        let g_mid = &gy[d..d + n];
        let x0 = &x[..n];
        let x1 = &x[d..d + n];
        let x2 = &x[2 * d..2 * d + n];
        let chunks = n / LANES;
        for ch in 0..chunks {
            let base = ch * LANES;
            let g = &g_mid[base..base + LANES];
            let v0 = &x0[base..base + LANES];
            let v1 = &x1[base..base + LANES];
            let v2 = &x2[base..base + LANES];
            for j in 0..LANES {
                a0[j] += g[j] * v0[j];
                a1[j] += g[j] * v1[j];
                a2[j] += g[j] * v2[j];
            }
        }
        for (j, i) in (chunks * LANES..n).enumerate() {
            a0[j] += g_mid[i] * x0[i];
            a1[j] += g_mid[i] * x1[i];
            a2[j] += g_mid[i] * x2[i];
        }
    }
    let mut g0 = fold_lanes(&a0);
    let mut g1 = fold_lanes(&a1);
    let mut g2 = fold_lanes(&a2);
    // edge strips outside the interior window
    for i in 0..d {
        g1 += gy[i] * x[i];
        g2 += gy[i] * x[i + d];
    }
    for i in t - d..t {
        g0 += gy[i] * x[i - d];
        g1 += gy[i] * x[i];
    }
    (g0, g1, g2)
}

/// Zero-padded "same" dilated convolution of a `[c_in x t]` input with a
/// `[c_out x c_in x k]` weight.
pub fn conv1d_forward<F: Real>(
    x: &Tensor2D<F>,
    weight: &Parameter<F>,
    bias: Option<&Parameter<F>>,
    dilation: usize,
) -> Result<Tensor2D<F>, TensorError> {
    let (c_out, c_in, k) = check_geometry(x, weight, bias, dilation)?;
    let t = x.time();
    let half = (k - 1) / 2;
    let mut y = Tensor2D::zeros(c_out, t);
    if let Some(b) = bias {
        for co in 0..c_out {
            let bv = b.values()[co];
            y.row_mut(co).iter_mut().for_each(|v| *v = bv);
        }
    }
    let w = weight.values();
    if k == 1 || k == 3 {
        let mut co = 0;
        while co + 1 < c_out {
            let (r0, r1) = two_rows_mut(&mut y, co, co + 1);
            for ci in 0..c_in {
                let x_row = x.row(ci);
                let wa = &w[(co * c_in + ci) * k..][..k];
                let wb = &w[((co + 1) * c_in + ci) * k..][..k];
                if k == 3 {
                    stencil3_pair(r0, r1, x_row, [wa[0], wa[1], wa[2]], [wb[0], wb[1], wb[2]], dilation);
                } else {
                    axpy_pair(r0, r1, x_row, wa[0], wb[0]);
                }
            }
            co += 2;
        }
        if co < c_out {
            let y_row = y.row_mut(co);
            for ci in 0..c_in {
                let x_row = x.row(ci);
                let wk = &w[(co * c_in + ci) * k..][..k];
                if k == 3 {
                    stencil3(y_row, x_row, wk[0], wk[1], wk[2], dilation);
                } else {
                    axpy_shifted(y_row, x_row, wk[0], 0);
                }
            }
        }
    } else {
        for co in 0..c_out {
            let y_row = y.row_mut(co);
            for ci in 0..c_in {
                let x_row = x.row(ci);
                let wk = &w[(co * c_in + ci) * k..][..k];
                for (kk, &wv) in wk.iter().enumerate() {
                    let off = (kk as isize - half as isize) * dilation as isize;
                    axpy_shifted(y_row, x_row, wv, off);
                }
            }
        }
    }
    debug_assert!(y.is_finite());
    Ok(y)
}

/// Reverse mode of [`conv1d_forward`].
///
/// Returns the gradient with respect to the input and accumulates (+=) into
/// `weight.grad` / `bias.grad` for trainable parameters; frozen parameters
/// keep their gradient untouched while the input gradient is still produced.
pub fn conv1d_backward<F: Real>(
    grad_y: &Tensor2D<F>,
    x: &Tensor2D<F>,
    weight: &mut Parameter<F>,
    mut bias: Option<&mut Parameter<F>>,
    dilation: usize,
) -> Result<Tensor2D<F>, TensorError> {
    let (c_out, c_in, k) = check_geometry(x, weight, bias.as_deref(), dilation)?;
    if grad_y.channels() != c_out || grad_y.time() != x.time() {
        return Err(TensorError::ShapeMismatch(format!(
            "grad_y is {}x{}, expected {c_out}x{}",
            grad_y.channels(),
            grad_y.time(),
            x.time()
        )));
    }
    let t = x.time();
    let half = (k - 1) / 2;
    let w = weight.values().to_vec();

    // transposed conv for the input gradient: taps flip around the center
    let mut grad_x = Tensor2D::zeros(c_in, t);
    if k == 1 || k == 3 {
        let mut ci = 0;
        while ci + 1 < c_in {
            let (r0, r1) = two_rows_mut(&mut grad_x, ci, ci + 1);
            for co in 0..c_out {
                let gy_row = grad_y.row(co);
                let wa = &w[(co * c_in + ci) * k..][..k];
                let wb = &w[(co * c_in + ci + 1) * k..][..k];
                if k == 3 {
                    stencil3_pair(r0, r1, gy_row, [wa[2], wa[1], wa[0]], [wb[2], wb[1], wb[0]], dilation);
                } else {
                    axpy_pair(r0, r1, gy_row, wa[0], wb[0]);
                }
            }
            ci += 2;
        }
        if ci < c_in {
            let gx_row = grad_x.row_mut(ci);
            for co in 0..c_out {
                let gy_row = grad_y.row(co);
                let wk = &w[(co * c_in + ci) * k..][..k];
                if k == 3 {
                    stencil3(gx_row, gy_row, wk[2], wk[1], wk[0], dilation);
                } else {
                    axpy_shifted(gx_row, gy_row, wk[0], 0);
                }
            }
        }
    } else {
        for ci in 0..c_in {
            let gx_row = grad_x.row_mut(ci);
            for co in 0..c_out {
                let gy_row = grad_y.row(co);
                let wk = &w[(co * c_in + ci) * k..][..k];
                for (kk, &wv) in wk.iter().enumerate() {
                    let off = (half as isize - kk as isize) * dilation as isize;
                    axpy_shifted(gx_row, gy_row, wv, off);
                }
            }
        }
    }

    if weight.trainable() {
        let gw = weight.grad_mut();
        for co in 0..c_out {
            let gy_row = grad_y.row(co);
            for ci in 0..c_in {
                let x_row = x.row(ci);
                let base = (co * c_in + ci) * k;
                if k == 3 {
                    let (g0, g1, g2) = grad_w3(gy_row, x_row, dilation);
                    gw[base] += g0;
                    gw[base + 1] += g1;
                    gw[base + 2] += g2;
                } else {
                    for kk in 0..k {
                        let off = (kk as isize - half as isize) * dilation as isize;
                        gw[base + kk] += shifted_dot(gy_row, x_row, off);
                    }
                }
            }
        }
    }
    if let Some(b) = bias.as_deref_mut() {
        if b.trainable() {
            for co in 0..c_out {
                let s = sum(grad_y.row(co));
                b.grad_mut()[co] += s;
            }
        }
    }
    debug_assert!(grad_x.is_finite());
    Ok(grad_x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str, shape: Vec<usize>, vals: Vec<f64>) -> Parameter<f64> {
        Parameter::new(name, shape, vals)
    }

    #[test]
    fn identity_kernel_is_identity() {
        let x = Tensor2D::from_rows(&[vec![1.0, 2.0, 3.0]]);
        let w = p("w", vec![1, 1, 3], vec![0.0, 1.0, 0.0]);
        let y = conv1d_forward(&x, &w, None, 1).unwrap();
        assert_eq!(y.values(), x.values());
    }

    #[test]
    fn derivative_kernel() {
        let x = Tensor2D::from_rows(&[vec![1.0, 2.0, 3.0]]);
        let w = p("w", vec![1, 1, 3], vec![1.0, 0.0, -1.0]);
        let y = conv1d_forward(&x, &w, None, 1).unwrap();
        assert_eq!(y.values(), &[-2.0, -2.0, 2.0]);
    }

    #[test]
    fn dilated_taps_reach_across() {
        let x = Tensor2D::from_rows(&[vec![1.0, 0.0, 0.0, 0.0, 2.0]]);
        let w = p("w", vec![1, 1, 3], vec![1.0, 0.0, 1.0]);
        let y = conv1d_forward(&x, &w, None, 2).unwrap();
        assert_eq!(y.values(), &[0.0, 0.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn pointwise_backward_scales() {
        let x = Tensor2D::from_rows(&[vec![7.0, -3.0]]);
        let mut w = p("w", vec![1, 1, 1], vec![2.0]);
        let gy = Tensor2D::from_rows(&[vec![1.0, 1.0]]);
        let gx = conv1d_backward(&gy, &x, &mut w, None, 1).unwrap();
        assert_eq!(gx.values(), &[2.0, 2.0]);
        assert_eq!(w.grad(), &[4.0]); // 1*7 + 1*(-3)
    }

    #[test]
    fn frozen_weight_keeps_zero_grad() {
        let x = Tensor2D::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let mut w = p("w", vec![1, 1, 3], vec![0.5, 1.0, -0.5]);
        w.set_trainable(false);
        let gy = Tensor2D::from_rows(&[vec![1.0; 4]]);
        let gx = conv1d_backward(&gy, &x, &mut w, None, 1).unwrap();
        assert!(w.grad().iter().all(|&g| g == 0.0));
        assert!(gx.values().iter().any(|&g| g != 0.0));
    }

    #[test]
    fn dilation_span_guard() {
        let x = Tensor2D::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let w = p("w", vec![1, 1, 3], vec![1.0, 1.0, 1.0]);
        assert!(matches!(
            conv1d_forward(&x, &w, None, 2),
            Err(TensorError::DilationSpan { .. })
        ));
    }

    #[test]
    fn channel_mismatch_guard() {
        let x = Tensor2D::from_rows(&[vec![1.0, 2.0, 3.0]]);
        let w = p("w", vec![1, 2, 3], vec![0.0; 6]);
        assert!(matches!(
            conv1d_forward(&x, &w, None, 1),
            Err(TensorError::ShapeMismatch(_))
        ));
    }
}
