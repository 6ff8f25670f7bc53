use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the numerical core is written against: `f32` or `f64`.
pub trait Real:
    'static
    + Float
    + FromPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Default
    + Send
    + Sync
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
{
    /// Converts an `f64` literal, e.g. `T::lit(0.5)`.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
