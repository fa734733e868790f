//! Scalar abstraction shared by the field-generic parts of the crate.
//!
//! The weight formulas, the piecewise-linear profile and the affine geometry
//! only need ordered-field operations, so they are written against
//! [`Scalar`] and work for `f32`, `f64` and exact [`BigRational`].
//! Everything that must clear fractional exponents (quasi-norm comparisons,
//! schedules, the Cantor construction) is exact-only and uses
//! [`crate::Rational`] directly.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display
{
    /// Whether arithmetic on this type is exact.
    const EXACT: bool;

    /// Absolute tolerance used for equality-style checks (zero when exact).
    fn tolerance() -> Self;

    fn floor(&self) -> Self;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("representable") / Self::from_i64(den).expect("representable")
    }

    fn near(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    fn near_zero(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn tolerance() -> Self {
        1e-12
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;
    fn tolerance() -> Self {
        1e-5
    }
    fn floor(&self) -> Self {
        f32::floor(*self)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn tolerance() -> Self {
        Self::zero()
    }
    fn floor(&self) -> Self {
        Ratio::floor(self)
    }
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Scalar for Ratio<i64> {
    const EXACT: bool = true;
    fn tolerance() -> Self {
        Self::zero()
    }
    fn floor(&self) -> Self {
        Ratio::floor(self)
    }
    fn ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
}

/// Sum of a slice of scalars.
pub fn sum<T: Scalar>(xs: &[T]) -> T {
    xs.iter().cloned().fold(T::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_constructors_agree() {
        assert_eq!(<BigRational as Scalar>::ratio(3, 6), BigRational::new(1.into(), 2.into()));
        assert_eq!(<f64 as Scalar>::ratio(1, 4), 0.25);
        assert_eq!(<Ratio<i64> as Scalar>::ratio(2, 4), Ratio::new(1, 2));
    }

    #[test]
    fn floor_of_negative_rational() {
        let x = <BigRational as Scalar>::ratio(-3, 2);
        assert_eq!(Scalar::floor(&x), <BigRational as Scalar>::ratio(-2, 1));
    }

    #[test]
    fn float_near_uses_tolerance() {
        assert!(0.1f64 + 0.2 != 0.3);
        assert!((0.1f64 + 0.2).near(&0.3));
        assert!(!<BigRational as Scalar>::ratio(1, 3).near(&<BigRational as Scalar>::ratio(1, 2)));
    }
}
