//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating point type the simulator can run on (`f32` or `f64`).
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Total for every finite input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Tolerance used when comparing times that should coincide on the grid
    /// (breakpoints, Heaviside switches), scaled by the magnitude of the times
    /// involved.
    fn time_tol(scale: Self) -> Self {
        let floor = Self::lit(1e-12);
        let ulp = Self::epsilon() * Self::lit(64.0);
        floor.max(ulp) * Self::one().max(scale.abs())
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{iφ}` scaled by `r`.
pub(crate) fn polar<T: Real>(r: T, phase: T) -> Complex<T> {
    Complex::from_polar(r, phase)
}

/// Reduces a phase to `[0, 2π)`.
pub fn wrap_phase<T: Real>(phase: T) -> T {
    let two_pi = T::TAU();
    let mut p = phase % two_pi;
    if p < T::zero() {
        p = p + two_pi;
    }
    // `p + 2π` can round up to exactly 2π for tiny negative inputs.
    if p >= two_pi {
        p = T::zero();
    }
    p
}
