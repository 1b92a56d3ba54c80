//! Floating-point scalar abstraction shared by every numeric kernel.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

use crate::linalg::NumericPolicy;

/// Real scalar type the synthesis and simulation code is generic over.
///
/// Implemented for `f32` and `f64`. Each implementation supplies the
/// tolerances its precision can honour.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Tolerances appropriate for this precision.
    fn default_policy() -> NumericPolicy<Self>;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f64 {
    fn default_policy() -> NumericPolicy<Self> {
        NumericPolicy {
            residual_tol: 1e-10,
            pd_tol: 1e-10,
            care_residual_tol: 1e-9,
            newton_max_iter: 100,
            newton_step_tol: 1e-12,
            singular_tol: 1e-13,
            rank_tol: 1e-7,
            eig_tol: 1e-6,
            lambda0_tol: 1e-10,
        }
    }
}

impl Scalar for f32 {
    fn default_policy() -> NumericPolicy<Self> {
        NumericPolicy {
            residual_tol: 1e-4,
            pd_tol: 1e-5,
            care_residual_tol: 1e-3,
            newton_max_iter: 100,
            newton_step_tol: 1e-6,
            singular_tol: 1e-6,
            rank_tol: 1e-3,
            eig_tol: 1e-3,
            lambda0_tol: 1e-5,
        }
    }
}
