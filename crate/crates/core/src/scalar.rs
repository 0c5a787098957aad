//! Scalar abstraction shared by the polynomial, QUBO and simulator layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Coefficients whose magnitude falls below this are removed after arithmetic.
    fn drop_tolerance() -> Self {
        Self::from_f64(1e-12).unwrap_or_else(Self::epsilon)
    }

    /// Converts from `f64`, rounding when the target is narrower.
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
