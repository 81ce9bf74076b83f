use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// Forward-mode number with `N` tangent directions.
///
/// The component type is itself a [`Scalar`], so `Dual<Var, N>` gives exact
/// parameter gradients of spatial derivatives (reverse over forward).
#[derive(Clone, Copy, Debug)]
pub struct Dual<T: Scalar, const N: usize> {
    pub v: T,
    pub d: [T; N],
}

impl<T: Scalar, const N: usize> Dual<T, N> {
    pub fn new(v: T, d: [T; N]) -> Self {
        Dual { v, d }
    }

    /// Constant lifted from the component type.
    pub fn lift(v: T) -> Self {
        Dual { v, d: [T::zero(); N] }
    }

    /// Independent variable number `k` (seed tangent `e_k`).
    pub fn seed(v: T, k: usize) -> Self {
        let mut d = [T::zero(); N];
        d[k] = T::one();
        Dual { v, d }
    }

    #[inline]
    fn chain(self, v: T, dv: T) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = *x * dv;
        }
        Dual { v, d }
    }
}

impl<T: Scalar, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(r.d) {
            *a = *a + b;
        }
        Dual { v: self.v + r.v, d }
    }
}

impl<T: Scalar, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(r.d) {
            *a = *a - b;
        }
        Dual { v: self.v - r.v, d }
    }
}

impl<T: Scalar, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(r.d) {
            *a = *a * r.v + self.v * b;
        }
        Dual { v: self.v * r.v, d }
    }
}

impl<T: Scalar, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        let q = self.v / r.v;
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(r.d) {
            *a = (*a - q * b) / r.v;
        }
        Dual { v: q, d }
    }
}

impl<T: Scalar, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut d = self.d;
        for a in d.iter_mut() {
            *a = -*a;
        }
        Dual { v: -self.v, d }
    }
}

impl<T: Scalar, const N: usize> Scalar for Dual<T, N> {
    #[inline]
    fn constant(v: f64) -> Self {
        Dual::lift(T::constant(v))
    }

    #[inline]
    fn value(self) -> f64 {
        self.v.value()
    }

    #[inline]
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        self.chain(t, T::one() - t * t)
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    #[inline]
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, T::constant(0.5) / s)
    }

    #[inline]
    fn abs(self) -> Self {
        let x = self.v.value();
        let sgn = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.v.abs(), T::constant(sgn))
    }

    #[inline]
    fn cos(self) -> Self {
        // sin(x) = cos(x - pi/2) keeps the primitive set closed.
        let s = (self.v - T::constant(std::f64::consts::FRAC_PI_2)).cos();
        self.chain(self.v.cos(), -s)
    }

    #[inline]
    fn acos(self) -> Self {
        let v = self.v;
        self.chain(v.acos(), -(T::one() / (T::one() - v * v).sqrt()))
    }

    #[inline]
    fn max(self, other: Self) -> Self {
        if self.v.value() >= other.v.value() {
            self
        } else {
            other
        }
    }

    #[inline]
    fn min(self, other: Self) -> Self {
        if self.v.value() <= other.v.value() {
            self
        } else {
            other
        }
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        let dv = if n == 0 { T::zero() } else { self.v.powi(n - 1).scale(n as f64) };
        self.chain(self.v.powi(n), dv)
    }

    #[inline]
    fn powf(self, e: f64) -> Self {
        self.chain(self.v.powf(e), self.v.powf(e - 1.0).scale(e))
    }
}
