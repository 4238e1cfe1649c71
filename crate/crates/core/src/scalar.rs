//! Scalar abstraction shared by the point, estimator and solver code.
//!
//! Everything that only needs field arithmetic and ordering is generic over
//! [`Scalar`], so the same code runs on `f64`, `f32` and exact rationals
//! (`num_rational::Rational64`). Routines that need square roots, SVD or
//! Gaussian draws stay on `f64`.

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Ordered field element usable by the search-space and solver code.
pub trait Scalar:
    Num + NumAssign + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; panics only on non-finite input.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite value representable in scalar type")
    }

    /// Lossy conversion to `f64`.
    fn to_f(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute tolerance used for simplex-sum checks; zero for exact types.
    fn simplex_tol() -> Self;
}

impl Scalar for f64 {
    fn simplex_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn simplex_tol() -> Self {
        1e-5
    }
}

impl Scalar for num_rational::Rational64 {
    fn simplex_tol() -> Self {
        Self::from_integer(0)
    }
}

/// Sum of an iterator of scalars.
pub fn sum<T: Scalar>(it: impl IntoIterator<Item = T>) -> T {
    it.into_iter().fold(T::zero(), |acc, x| acc + x)
}
