//! Scalar abstractions.
//!
//! Algebraic formulas (model constants, regime checks) only need field
//! operations and are generic over [`Coefficient`], which admits exact
//! rationals. Everything that touches the FFT needs [`Real`].

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};
use rustfft::FftNum;

/// Ordered field element with small-integer literals.
pub trait Coefficient:
    Clone + Debug + Num + Neg<Output = Self> + PartialOrd + FromPrimitive + ToPrimitive
{
    /// Integer literal.
    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer literal must be representable")
    }

    /// Ratio of two integer literals.
    fn ratio(num: i64, den: i64) -> Self {
        Self::int(num) / Self::int(den)
    }

    /// Lossy conversion to `f64` for reporting.
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Coefficient for T where
    T: Clone + Debug + Num + Neg<Output = T> + PartialOrd + FromPrimitive + ToPrimitive
{
}

/// Floating point scalar usable in spectral kernels.
pub trait Real:
    Coefficient + Float + FloatConst + FftNum + Signed + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal must be representable")
    }

    /// Converts a count.
    fn count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count must be representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.approx()
    }
}

impl Real for f32 {}
impl Real for f64 {}
