use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating point scalar used by the planar geometry.
///
/// Implemented for `f32` and `f64`; the detection pipeline runs on `f64`.
pub trait Real: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    /// Converts a literal. Every `f64` literal used in this crate is representable.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}
