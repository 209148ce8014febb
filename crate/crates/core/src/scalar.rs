//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Sum
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `n` points log-spaced on `[lo, hi]`, both ends included.
pub fn logspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2 && lo > T::zero() && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    let denom = lit::<T>((n - 1) as f64);
    (0..n)
        .map(|i| (a + (b - a) * lit::<T>(i as f64) / denom).exp())
        .collect()
}

/// `n` points evenly spaced on `[lo, hi]`, both ends included.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2);
    let denom = lit::<T>((n - 1) as f64);
    (0..n)
        .map(|i| lo + (hi - lo) * lit::<T>(i as f64) / denom)
        .collect()
}
