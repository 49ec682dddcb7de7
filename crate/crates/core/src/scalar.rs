//! Scalar abstraction for the closed-form kernels.
//!
//! The analytic kernels in [`crate::kernels`] are generic over any float that
//! satisfies this trait; the discretized layers instantiate everything at
//! `f64` (see the aliases at the crate root).

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating scalar usable by the closed-form kernels.
pub trait Real: Float + FloatConst + FromPrimitive + core::fmt::Debug + 'static {
    /// Shorthand for lossy conversion from `f64` literals.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
