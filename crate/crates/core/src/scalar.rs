//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating point type the discretization is generic over.
///
/// Implemented for `f32` and `f64`. Machine-precision tolerances quoted in
/// the tests assume `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Type name used in legacy VTK headers.
    const VTK_NAME: &'static str;

    /// Converts an `f64` literal. Never fails for the implemented types.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Default relative tolerance for iterative linear solves.
    ///
    /// `1e-10` for `f64`; floored at a few hundred ulps for narrower types.
    fn solver_tol() -> Self {
        let floor = Self::epsilon() * Self::lit(256.0);
        Self::lit(1e-10).max(floor)
    }
}

impl Scalar for f32 {
    const VTK_NAME: &'static str = "float";
}

impl Scalar for f64 {
    const VTK_NAME: &'static str = "double";
}
