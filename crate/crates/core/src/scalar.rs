//! Scalar abstraction for the generic linear-algebra core.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real scalar usable by the generic modules (`f32`, `f64`).
pub trait Real: RealField + Copy + ToPrimitive {
    /// Default relative tolerance for rank and membership decisions.
    fn default_tol() -> Self;

    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-4
    }
}
