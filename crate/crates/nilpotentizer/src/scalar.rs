//! Coefficient rings shared by the algebraic code.
//!
//! Structure constants are stored both as exact rationals and as `f64`; a
//! [`Scalar`] picks the representation it needs through [`Const`].

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// An exact rational together with its floating view.
#[derive(Clone, Debug, PartialEq)]
pub struct Const {
    pub exact: BigRational,
    pub float: f64,
}

impl Const {
    pub fn new(exact: BigRational) -> Self {
        let float = exact.to_f64().unwrap_or(f64::NAN);
        Const { exact, float }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Const::new(BigRational::new(num.into(), den.into()))
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_const(c: &Const) -> Self;
    fn from_f64(x: f64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_const(&Const::from_ratio(n, 1))
    }
}

impl Scalar for f64 {
    fn from_const(c: &Const) -> Self {
        c.float
    }
    fn from_f64(x: f64) -> Self {
        x
    }
}

impl Scalar for BigRational {
    fn from_const(c: &Const) -> Self {
        c.exact.clone()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }
}

/// First-order dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let eps = self.re.clone() * o.eps + self.eps * o.re.clone();
        Dual::new(self.re * o.re, eps)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Zero for Dual<T> {
    fn zero() -> Self {
        Dual::constant(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
}

impl<T: Scalar> One for Dual<T> {
    fn one() -> Self {
        Dual::constant(T::one())
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_const(c: &Const) -> Self {
        Dual::constant(T::from_const(c))
    }
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
}

/// Embeds a slice into duals with the given tangent direction.
pub fn seed_dual<T: Scalar>(base: &[T], dir: &[T]) -> Vec<Dual<T>> {
    base.iter()
        .zip(dir)
        .map(|(b, d)| Dual::new(b.clone(), d.clone()))
        .collect()
}

pub fn to_f64_vec(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_rule() {
        let a = Dual::new(3.0, 1.0);
        let b = Dual::new(2.0, 0.0);
        let p = a.clone() * a * b;
        assert_eq!(p.re, 18.0);
        assert_eq!(p.eps, 12.0);
    }

    #[test]
    fn const_float_view() {
        let c = Const::from_ratio(1, 3);
        assert!((c.float - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(<BigRational as Scalar>::from_const(&c), BigRational::new(1.into(), 3.into()));
    }
}
