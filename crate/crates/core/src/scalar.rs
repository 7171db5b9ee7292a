//! Scalar abstraction for the numerical kernels.
//!
//! Everything numeric in this crate is generic over a floating-point scalar
//! so the same kernels run in `f64` (the default used by the CLI and the file
//! formats) or `f32` (quick exploration, memory-bound sweeps).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar with everything the spectral machinery needs:
/// IEEE arithmetic, common constants, conversions, and FFT support.
///
/// Implemented for `f32` and `f64`; downstream code should not need to
/// implement it for anything else.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + rustfft::FftNum
    + Sum<Self>
    + Display
    + LowerExp
    + Debug
{
    /// Convert a finite `f64` constant into the scalar type.
    ///
    /// Panics only if the conversion is impossible, which cannot happen for
    /// the finite literals this crate feeds it.
    fn cst(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant must be representable")
    }

    /// Convert a `usize` (grid size, counter) into the scalar type.
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize must be representable")
    }

    /// Two-argument power `self^p` with a real exponent.
    fn powr(self, p: Self) -> Self {
        self.powf(p)
    }
}

impl Real for f32 {}
impl Real for f64 {}
