//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar the core math is generic over: `f32` or `f64`.
///
/// Tolerances quoted for `f64` are lifted through [`Scalar::tol`], which never
/// lets a threshold fall below what the type can resolve.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// `max(value, factor * epsilon)`: an f64-calibrated tolerance floored at
    /// the type's resolution.
    fn tol(value: f64, factor: f64) -> Self {
        Self::of(value).max(Self::epsilon() * Self::of(factor))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
