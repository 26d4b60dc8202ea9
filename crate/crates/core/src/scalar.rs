//! Scalar abstractions.
//!
//! [`Field`] is enough for the exact jump-chain algebra (transition
//! probabilities and the dynamic program), so it also admits exact
//! rationals. [`Real`] adds the transcendental functions that sampling and
//! quadrature need, and is implemented for `f32` and `f64`.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered field with conversion from machine integers.
pub trait Field: Num + Clone + PartialOrd + FromPrimitive + Debug {
    /// Converts a vertex count. Counts are bounded well below 2^53.
    fn from_count(k: u64) -> Self {
        Self::from_u64(k).expect("count representable in scalar type")
    }
}

impl<T> Field for T where T: Num + Clone + PartialOrd + FromPrimitive + Debug {}

/// Floating-point scalar used by the simulators and numerics.
pub trait Real: Field + Float + ToPrimitive + Copy + Send + Sync + 'static {
    /// Converts an `f64` literal or sample.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
