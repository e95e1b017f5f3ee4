//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};

/// A real scalar usable by the survival, regression and network code.
///
/// Implemented for `f32` and `f64`. Display output of both types is the
/// shortest string that parses back to the identical value, which the text
/// serializers rely on for bit-exact round trips.
pub trait Scalar:
    Float
    + FromPrimitive
    + LinalgScalar
    + ScalarOperand
    + Default
    + Debug
    + Display
    + FromStr
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant. Panics only for values the type cannot
    /// represent at all, which never happens for `f32`/`f64`.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable as Scalar")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize representable as Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    fn parse_scalar(text: &str) -> Option<Self> {
        text.trim().parse().ok()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable `ln(Σ exp(v))`. Returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp<T> {
    max: T,
    scaled_sum: T,
}

impl<T: Scalar> Default for LogSumExp<T> {
    fn default() -> Self {
        Self {
            max: T::neg_infinity(),
            scaled_sum: T::zero(),
        }
    }
}

impl<T: Scalar> LogSumExp<T> {
    pub fn push(&mut self, value: T) {
        if value > self.max {
            self.scaled_sum = self.scaled_sum * (self.max - value).exp() + T::one();
            self.max = value;
        } else {
            self.scaled_sum += (value - self.max).exp();
        }
    }

    pub fn value(&self) -> T {
        if self.scaled_sum == T::zero() {
            T::neg_infinity()
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}
