//! Real scalar abstraction shared by every matrix-valued structure.

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type backing the complex entries: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Absolute tolerance used when none is supplied.
    const DEFAULT_TOL: f64;

    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn default_tol() -> Self {
        Self::lit(Self::DEFAULT_TOL)
    }
}

impl Real for f64 {
    const DEFAULT_TOL: f64 = 1e-9;
}

// single precision cannot resolve 1e-9; residuals of products sit near 1e-6
impl Real for f32 {
    const DEFAULT_TOL: f64 = 1e-4;
}

pub type C<T> = Complex<T>;

pub fn cplx<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}
