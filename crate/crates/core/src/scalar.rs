//! Scalar abstraction: all numerical routines in this crate are generic over
//! a floating-point type so they run in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Convert from `f64`, panicking only for types that cannot represent
    /// ordinary finite values (never for `f32`/`f64`).
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 -> Real conversion")
    }

    /// Convert to `f64` for interop with scalar-only routines (special
    /// functions, RNG distributions).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real -> f64 conversion")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize -> Real conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
