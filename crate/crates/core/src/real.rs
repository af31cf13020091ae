//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type underlying the complex matrix entries: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable")
    }

    /// Widening conversion used by the report writers.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

pub(crate) fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

pub(crate) fn is_zero<T: Real>(z: Complex<T>) -> bool {
    z.re == T::zero() && z.im == T::zero()
}

/// Euclidean norm of a complex vector, scaled to avoid overflow.
pub fn norm2<T: Real>(v: &[Complex<T>]) -> T {
    let scale = v
        .iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(T::zero(), T::max);
    if scale == T::zero() {
        return T::zero();
    }
    let sum = v.iter().fold(T::zero(), |acc, z| {
        let re = z.re / scale;
        let im = z.im / scale;
        acc + re * re + im * im
    });
    scale * sum.sqrt()
}
