//! Floating-point scalar abstraction used by the numeric core.
//!
//! The classifier, its optimizer and the evaluation code are written once
//! against [`Scalar`] and instantiated for `f32` and `f64`. Circuit parsing,
//! bond-graph construction and dataset files always work in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::NdFloat;
use num_traits::{FromPrimitive, ToPrimitive};

pub trait Scalar: NdFloat + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default {
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Number of mantissa bits, used to pick tolerances in generic tests.
    const MANTISSA_DIGITS: u32;
}

impl Scalar for f32 {
    const MANTISSA_DIGITS: u32 = f32::MANTISSA_DIGITS;
}

impl Scalar for f64 {
    const MANTISSA_DIGITS: u32 = f64::MANTISSA_DIGITS;
}
