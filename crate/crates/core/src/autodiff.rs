//! Forward-mode automatic differentiation over complex values.
//!
//! The probe response is a rational function of the detuning, hence analytic
//! away from its poles. Carrying a first-order jet `(value, derivative)`
//! through the arithmetic yields the exact complex derivative without
//! hand-derived formulas or finite-difference noise.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;

use crate::scalar::Scalar;

/// A complex value paired with its derivative with respect to one real
/// parameter (here always the probe detuning).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub val: Complex<T>,
    pub der: Complex<T>,
}

impl<T: Scalar> Jet<T> {
    /// A constant: zero derivative.
    pub fn constant(val: Complex<T>) -> Self {
        Jet { val, der: Complex::new(T::zero(), T::zero()) }
    }

    /// A real constant.
    pub fn real(x: T) -> Self {
        Self::constant(Complex::new(x, T::zero()))
    }

    /// The differentiation variable itself: unit derivative.
    pub fn variable(val: T) -> Self {
        Jet {
            val: Complex::new(val, T::zero()),
            der: Complex::new(T::one(), T::zero()),
        }
    }

    /// Multiply by the imaginary unit.
    pub fn mul_i(self) -> Self {
        let i = Complex::new(T::zero(), T::one());
        Jet { val: self.val * i, der: self.der * i }
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Jet { val: self.val + rhs.val, der: self.der + rhs.der }
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Jet { val: self.val - rhs.val, der: self.der - rhs.der }
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Jet {
            val: self.val * rhs.val,
            der: self.der * rhs.val + self.val * rhs.der,
        }
    }
}

impl<T: Scalar> Div for Jet<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let val = self.val / rhs.val;
        Jet {
            val,
            der: (self.der - val * rhs.der) / rhs.val,
        }
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet { val: -self.val, der: -self.der }
    }
}

impl<T: Scalar> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Jet { val: self.val * rhs, der: self.der * rhs }
    }
}
