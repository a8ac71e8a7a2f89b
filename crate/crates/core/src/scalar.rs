//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the solvers are generic over (`f32` or `f64`).
///
/// Tolerances are part of the scalar because a stochasticity check at
/// `1e-12` is meaningless in single precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Slack allowed on probability masses (row sums, belief mass).
    const MASS_TOL: f64;
    /// Normalizers at or below this are structural zeros (inadmissible).
    const ADMISSIBLE_TOL: f64;
    /// Entries at or below this count as zero in positivity patterns.
    const POSITIVE_TOL: f64;
    /// Beliefs closer than this in max-norm are merged in tree searches.
    const MERGE_TOL: f64;

    /// Converts an `f64` literal. Panics only on NaN-free overflow, which cannot
    /// happen for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    fn mass_tol() -> Self {
        Self::lit(Self::MASS_TOL)
    }

    fn admissible_tol() -> Self {
        Self::lit(Self::ADMISSIBLE_TOL)
    }

    fn positive_tol() -> Self {
        Self::lit(Self::POSITIVE_TOL)
    }
}

impl Scalar for f64 {
    const MASS_TOL: f64 = 1e-12;
    const ADMISSIBLE_TOL: f64 = 1e-15;
    const POSITIVE_TOL: f64 = 1e-15;
    const MERGE_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const MASS_TOL: f64 = 1e-5;
    const ADMISSIBLE_TOL: f64 = 1e-15;
    const POSITIVE_TOL: f64 = 1e-15;
    const MERGE_TOL: f64 = 1e-6;
}

/// `⌈x⌉` that absorbs decimal representation error, so `⌈1/0.1⌉ = 10`.
pub fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

pub(crate) fn l1_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum()
}

pub(crate) fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}
