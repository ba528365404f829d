//! Scalar abstraction for point coordinates.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar used for coordinates, distances, and hash
/// projections. Implemented for `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Copy + Send + Sync + 'static
{
    /// One draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw from `[0, hi)`.
    fn uniform_to<R: Rng + ?Sized>(rng: &mut R, hi: Self) -> Self;

    fn from_f64(x: f64) -> Self {
        FromPrimitive::from_f64(x).expect("value representable in scalar type")
    }

    fn into_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f32 {
        StandardNormal.sample(rng)
    }

    fn uniform_to<R: Rng + ?Sized>(rng: &mut R, hi: f32) -> f32 {
        rng.gen_range(0.0..hi)
    }
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        StandardNormal.sample(rng)
    }

    fn uniform_to<R: Rng + ?Sized>(rng: &mut R, hi: f64) -> f64 {
        rng.gen_range(0.0..hi)
    }
}
