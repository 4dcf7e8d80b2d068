//! Floating-point abstraction shared by every solver.
//!
//! All numerical code in this crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. The concrete `f64` aliases exported from
//! the crate root are what the command-line tools use.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Scalar type the solvers are generic over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`, rounding if necessary.
    #[inline]
    fn lit(x: f64) -> Self {
        // Every finite f64 is representable (possibly rounded or as ±inf) in
        // both implementing types.
        Self::from_f64(x).expect("f64 literal must convert")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count must convert")
    }

    /// Lossless widening to `f64` (used for reporting and I/O).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float must widen to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
