//! Scalar abstraction shared by every solver and metric.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the crate is generic over (`f32` or `f64`).
///
/// Tolerances quoted in the docs assume `f64`; `f32` instantiations work
/// but only to single precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Converts an integer count into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Relative-or-absolute closeness used by the feasibility checks.
#[inline]
pub fn le_with_rel_tol<F: Real>(lhs: F, rhs: F, rel: F) -> bool {
    lhs <= rhs + rel * rhs.abs()
}
