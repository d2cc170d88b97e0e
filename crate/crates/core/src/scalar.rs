//! Floating-point abstraction shared by every numeric kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar the kernels can run on: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants and accumulated results.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar always converts to f64")
    }

    /// Relative epsilon used by the geometric predicates.
    fn geom_eps() -> Self;
}

impl Scalar for f32 {
    fn geom_eps() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn geom_eps() -> Self {
        1e-10
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

#[inline]
pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    sq_dist(a, b).sqrt()
}
