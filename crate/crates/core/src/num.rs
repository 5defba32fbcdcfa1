//! Scalar abstractions.
//!
//! Distributions, classifiers and error evaluation work over any [`Scalar`]:
//! `f32`, `f64`, or an exact rational such as [`num_rational::Rational64`].
//! The learning algorithms additionally need logarithms and square roots and
//! are written against [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// A probability-valued number type.
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// A floating-point [`Scalar`].
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// Converts an `f64` constant into `P`.
///
/// Panics only if `P` cannot represent a finite double at all, which does not
/// happen for the float and 64-bit rational types this crate is used with.
pub fn constant<P: Scalar>(x: f64) -> P {
    P::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable in the scalar type"))
}

/// Converts a count into `P`.
pub fn count<P: Scalar>(n: u64) -> P {
    P::from_u64(n).unwrap_or_else(|| panic!("{n} is not representable in the scalar type"))
}

/// Lossy view of `x` as `f64`.
pub fn to_f64<P: Scalar>(x: P) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Ceiling that treats values within a relative `1e-9` of an integer as that
/// integer, so `148 / 0.1` is 1480 and not 1481 after rounding noise.
pub fn ceil_count(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// `⌈log2(x)⌉` with the same integer snapping as [`ceil_count`].
pub fn ceil_log2(x: f64) -> u64 {
    ceil_count(x.log2())
}

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}
