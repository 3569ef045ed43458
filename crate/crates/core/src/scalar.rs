//! Scalar abstraction shared by the analytic and simulation code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable as a probability: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a step count into the scalar type. Step counts never exceed
    /// what a float can represent closely enough for an exponent.
    fn from_step(step: u64) -> Self {
        Self::from_u64(step).expect("step count representable as float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
