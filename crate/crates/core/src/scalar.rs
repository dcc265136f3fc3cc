//! Scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating scalar the pure-math kernels are generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literals in generic code.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to Real")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + NumAssign + Sum<T> + Debug + Display + Send + Sync + 'static
{
}

/// Compensated (Kahan) accumulator. Event times in long runs are sums of
/// billions of exponentials; plain summation drifts once counts pass ~1e9.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum<R: Real> {
    sum: R,
    carry: R,
}

impl<R: Real> KahanSum<R> {
    pub fn new() -> Self {
        Self {
            sum: R::zero(),
            carry: R::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: R) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> R {
        self.sum
    }
}
