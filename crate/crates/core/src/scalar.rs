use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the numerical core is generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Relative tolerance that degrades gracefully for low precision scalars:
/// `max(tol, factor * epsilon)`.
#[inline]
pub(crate) fn tol_or_eps<T: Real>(tol: f64, factor: f64) -> T {
    T::lit(tol).max(T::epsilon() * T::lit(factor))
}
