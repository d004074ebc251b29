use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point type the chain algebra is generic over: `f32` or `f64`.
///
/// `Display` and `FromStr` are required so snapshots can persist probabilities
/// with a shortest round-trip representation.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` statistic.
    fn from_f64_lossy(value: f64) -> Self {
        <Self as NumCast>::from(value).unwrap_or_else(Self::nan)
    }

    fn from_count(count: u64) -> Self {
        <Self as NumCast>::from(count).unwrap_or_else(Self::infinity)
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
