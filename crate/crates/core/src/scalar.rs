//! Scalar abstraction for the numeric analysis routines.
//!
//! Everything in [`crate::analysis`] that manipulates probabilities or
//! bounds is generic over [`Real`], so the recursions can be evaluated in
//! `f32` when speed matters more than the last few digits, or in `f64` (the
//! crate default, see the aliases at the crate root). Bit-level protocol and
//! simulation code is deliberately *not* generic: it works on exact integers
//! and `u8` bits where a scalar knob would add nothing.

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point scalar usable in the analysis routines.
///
/// The two conversion helpers exist because the recursions mix literal
/// rational constants (e.g. binomial coefficients) into `Float` arithmetic;
/// `of` converts through `f64`, which is exact for every constant this crate
/// uses (all are representable in 24 bits or fewer).
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` constant into this scalar type.
    fn of(x: f64) -> Self;

    /// Converts a small unsigned integer into this scalar type.
    fn of_u64(x: u64) -> Self;
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }

    fn of_u64(x: u64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }

    fn of_u64(x: u64) -> Self {
        x as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_of_halves<R: Real>(terms: u32) -> R {
        let half = R::of(0.5);
        let mut acc = R::zero();
        let mut term = R::one();
        for _ in 0..terms {
            term = term * half;
            acc = acc + term;
        }
        acc
    }

    #[test]
    fn generic_arithmetic_matches_between_f32_and_f64() {
        let a: f32 = sum_of_halves(10);
        let b: f64 = sum_of_halves(10);
        assert!((f64::from(a) - b).abs() < 1e-6);
        assert!((b - (1.0 - 0.5f64.powi(10))).abs() < 1e-15);
    }

    #[test]
    fn conversions_are_exact_for_small_integers() {
        assert_eq!(<f64 as Real>::of_u64(48), 48.0);
        assert_eq!(<f32 as Real>::of_u64(31), 31.0);
        assert_eq!(<f64 as Real>::of(0.25), 0.25);
    }
}
