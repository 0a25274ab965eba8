//! Scalar abstraction for the numeric core.
//!
//! All matrix, training, scoring, and metric code is generic over [`Real`],
//! a floating-point scalar backed by `num-traits`. Concrete `f64` aliases
//! for the main types live at the crate root.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Convert a scalar back to `f64` (for metrics and serialization).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_both_widths() {
        let a: f32 = real(0.25);
        let b: f64 = real(0.25);
        assert_eq!(to_f64(a), 0.25);
        assert_eq!(to_f64(b), 0.25);
    }
}
