//! Scalar abstraction: every numerical routine in this crate is generic over
//! [`Scalar`], instantiated as `f32` or `f64`.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by all matrix and solver code.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static
{
    /// Lossy conversion from `f64`, for constants and RNG output.
    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any float scalar")
    }

    /// Lossy conversion from `usize` counts.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to any float scalar")
    }

    /// Conversion to `f64` for reporting and diagnostics.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
