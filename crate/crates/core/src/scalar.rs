//! Scalar abstraction shared by every module.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the library is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}

/// Complex coefficient over a real scalar.
pub type Cx<T> = Complex<T>;

pub(crate) fn modulus<T: Real>(z: Cx<T>) -> T {
    z.norm_sqr().sqrt()
}
