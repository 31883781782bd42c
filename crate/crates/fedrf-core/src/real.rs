//! Scalar abstraction over `f32` / `f64`.
//!
//! Training and inference run in `f32`; gradient checking runs the same code
//! paths in `f64`. The trait carries the two activation primitives so the
//! `f32` side can use branch-free polynomial approximations that the compiler
//! autovectorizes, while the `f64` side keeps full libm precision for
//! finite-difference comparisons.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

pub trait Real:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
    /// Logistic sigmoid 1 / (1 + e^-x).
    fn sigmoid(self) -> Self;
    /// Hyperbolic tangent.
    fn tanh_gate(self) -> Self;
}

impl Real for f32 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn sigmoid(self) -> Self {
        1.0 / (1.0 + fast_exp(-self))
    }
    #[inline(always)]
    fn tanh_gate(self) -> Self {
        // tanh(x) = (e^2x - 1) / (e^2x + 1); the clamp keeps e^2x finite and
        // already saturates tanh to +-1 within one f32 ulp.
        let t = fast_exp((2.0 * self).clamp(-18.0, 18.0));
        (t - 1.0) / (t + 1.0)
    }
}

impl Real for f64 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
    #[inline(always)]
    fn sigmoid(self) -> Self {
        1.0 / (1.0 + (-self).exp())
    }
    #[inline(always)]
    fn tanh_gate(self) -> Self {
        self.tanh()
    }
}

/// Polynomial e^x for f32, accurate to ~2 ulp over the clamped range.
///
/// Classic range reduction x = n*ln2 + r followed by a degree-5 polynomial on
/// r and a bit-level 2^n reconstruction. Pure arithmetic, so LLVM vectorizes
/// it inside elementwise loops; results are identical across runs.
#[inline(always)]
pub fn fast_exp(x: f32) -> f32 {
    const LOG2E: f32 = 1.442_695_04;
    const LN2_HI: f32 = 0.693_359_375;
    const LN2_LO: f32 = -2.121_944_4e-4;

    let x = x.clamp(-87.0, 88.0);
    let n = (LOG2E * x + 0.5).floor();
    let r = (x - n * LN2_HI) - n * LN2_LO;

    let mut p = 1.987_569_2e-4_f32;
    p = p * r + 1.398_199_9e-3;
    p = p * r + 8.333_452e-3;
    p = p * r + 4.166_579_6e-2;
    p = p * r + 1.666_666_5e-1;
    p = p * r + 5.000_000_1e-1;
    let y = p * r * r + r + 1.0;

    let bits = (((n as i32) + 127) as u32) << 23;
    y * f32::from_bits(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_exp_matches_libm() {
        let mut worst = 0.0f64;
        for i in -8700..=8800 {
            let x = i as f32 * 0.01;
            let got = fast_exp(x) as f64;
            let want = (x as f64).exp();
            let rel = ((got - want) / want).abs();
            worst = worst.max(rel);
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn sigmoid_tanh_fixed_points() {
        assert_eq!(0.0f32.tanh_gate(), 0.0);
        assert_eq!(0.5f32, 0.0f32.sigmoid());
        assert!((1.0 - 30.0f32.sigmoid()).abs() < 1e-9);
        assert!((0.5f32.tanh_gate() - 0.5f64.tanh() as f32).abs() < 1e-6);
        // odd symmetry
        assert!(((-3.0f32).tanh_gate() + 3.0f32.tanh_gate()).abs() < 1e-7);
    }

    #[test]
    fn f64_side_is_libm() {
        assert_eq!(1.25f64.tanh_gate(), 1.25f64.tanh());
        let s = 0.3f64.sigmoid();
        assert!((s - 1.0 / (1.0 + (-0.3f64).exp())).abs() < 1e-15);
    }
}
