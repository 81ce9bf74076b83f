//! Numeric abstraction shared by every pointwise kernel.
//!
//! Constitutive laws, output transforms and the network forward pass are
//! written once against [`Scalar`] and instantiated with plain floats for
//! evaluation, with [`Var`](crate::autodiff::Var) for reverse-mode gradients
//! and with [`Dual`](crate::autodiff::Dual) for input derivatives.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Lift a constant. Constants carry no derivative information.
    fn constant(v: f64) -> Self;

    /// Primal value as `f64`.
    fn value(self) -> f64;

    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn cos(self) -> Self;
    fn acos(self) -> Self;
    /// Larger of the two; on a tie the receiver (first argument) wins.
    fn max(self, other: Self) -> Self;
    /// Smaller of the two; on a tie the receiver (first argument) wins.
    fn min(self, other: Self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: f64) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::constant(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::constant(1.0)
    }

    #[inline]
    fn square(self) -> Self {
        self * self
    }

    #[inline]
    fn scale(self, k: f64) -> Self {
        self * Self::constant(k)
    }
}

macro_rules! impl_scalar_float {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            #[inline]
            fn constant(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn value(self) -> f64 {
                self as f64
            }
            #[inline]
            fn tanh(self) -> Self {
                <$t>::tanh(self)
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            #[inline]
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            #[inline]
            fn acos(self) -> Self {
                <$t>::acos(self)
            }
            #[inline]
            fn max(self, other: Self) -> Self {
                if self >= other { self } else { other }
            }
            #[inline]
            fn min(self, other: Self) -> Self {
                if self <= other { self } else { other }
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            #[inline]
            fn powf(self, e: f64) -> Self {
                <$t>::powf(self, e as $t)
            }
        }
    )*};
}

impl_scalar_float!(f32, f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_keeps_receiver() {
        assert_eq!(Scalar::max(-0.0f64, 0.0).to_bits(), (-0.0f64).to_bits());
        assert_eq!(Scalar::min(0.0f64, -0.0).to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn f32_and_f64_agree_on_simple_kernel() {
        fn kernel<S: Scalar>(x: S) -> S {
            (x.square() + S::one()).sqrt().tanh()
        }
        let a = kernel(0.3f64);
        let b = kernel(0.3f32) as f64;
        assert!((a - b).abs() < 1e-6);
    }
}
