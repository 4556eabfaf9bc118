//! Scalar abstraction shared by the load model, the worst-case algorithms and
//! the dense simplex.
//!
//! Floating point types compare with an absolute tolerance; exact rationals
//! compare exactly (their tolerance is zero).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Numeric type usable for sizes, loads and LP coefficients.
pub trait Scalar:
    Copy
    + PartialOrd
    + Signed
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Default absolute comparison slack for this type.
    fn default_tol() -> Self;

    /// Pivot threshold: entries with magnitude at or below it count as zero.
    fn pivot_eps() -> Self;

    fn from_f64_lossy(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn of_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `a <= b` up to `tol`.
    fn le_tol(a: Self, b: Self, tol: Self) -> bool {
        a <= b + tol
    }
}

impl Scalar for f64 {
    fn default_tol() -> Self {
        1e-9
    }
    fn pivot_eps() -> Self {
        1e-11
    }
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    fn default_tol() -> Self {
        1e-5
    }
    fn pivot_eps() -> Self {
        1e-6
    }
    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }
}

/// Exact rational with 128-bit numerator and denominator.
pub type Rational = Ratio<i128>;

impl Scalar for Rational {
    fn default_tol() -> Self {
        Ratio::from_integer(0)
    }
    fn pivot_eps() -> Self {
        Ratio::from_integer(0)
    }
    fn from_f64_lossy(x: f64) -> Self {
        // Dyadic approximation with a bounded denominator keeps arithmetic
        // inside i128 for the tiny problems rationals are used on.
        let den: i128 = 1 << 30;
        Ratio::new((x * den as f64).round() as i128, den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_is_exact() {
        let third = Rational::new(1, 3);
        assert_eq!(third + third + third, Rational::from_integer(1));
        assert_eq!(Rational::default_tol(), Rational::from_integer(0));
    }

    #[test]
    fn lossy_conversions() {
        assert_eq!(Rational::from_f64_lossy(0.25), Rational::new(1, 4));
        assert_eq!(<f32 as Scalar>::from_f64_lossy(0.5), 0.5f32);
        assert!((Rational::new(1, 8).to_f64_lossy() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn tolerant_comparison() {
        assert!(f64::le_tol(1.0 + 1e-10, 1.0, 1e-9));
        assert!(!f64::le_tol(1.0 + 1e-8, 1.0, 1e-9));
    }
}
