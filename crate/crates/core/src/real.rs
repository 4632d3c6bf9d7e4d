//! Scalar abstraction shared by the Weyl engine, the bath and the scheme.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the analytic engine is generic over (`f32` or `f64`).
///
/// Tolerances throughout the crate are written for `f64`; the `f32`
/// instantiation is supported for fast sweeps, not for validation.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or parameter into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        // Every f64 is representable (possibly rounded) in f32 and f64.
        Self::from_f64(x).expect("f64 literal is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
