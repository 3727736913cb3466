//! Real scalar abstraction for amplitudes.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable as the real part of an amplitude: `f32` or `f64`.
pub trait Scalar: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    /// Slack for norm, probability and overlap comparisons at this precision.
    fn tolerance() -> Self;

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
}
