//! Dense linear-algebra kernels used by gain synthesis.
//!
//! Everything here is sized for control problems of order ten or so:
//! matrix equations are solved through their Kronecker-vectorized linear
//! systems, and stability is certified with a Lyapunov solve followed by a
//! Cholesky test instead of an eigenvalue computation.

mod care;
mod equations;
mod lu;
mod spectral;

pub use care::{solve_care, CareProblem, CareSolution};
pub use equations::{solve_lyapunov, solve_lyapunov_with, solve_sylvester, solve_sylvester_with};
pub use lu::{solve_linear_system, Lu};
pub use spectral::{
    char_poly, cholesky, companion, complex_rank, eigenvalues, is_hurwitz, is_hurwitz_with,
    is_positive_definite, poly_roots, rank, symmetric_eigenvalues,
};

use crate::scalar::Scalar;

/// Centralized numeric tolerances.
///
/// Every kernel that makes an accept/reject decision reads its threshold
/// from here. Setting `COOPREG_TOL_SCALE` in the environment multiplies all
/// tolerance fields when the policy is built with [`NumericPolicy::from_env`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy<T> {
    /// Relative residual bound for Lyapunov and Sylvester solves.
    pub residual_tol: T,
    /// Cholesky pivot threshold for positive-definiteness checks.
    pub pd_tol: T,
    /// Residual bound for Riccati solutions.
    pub care_residual_tol: T,
    pub newton_max_iter: usize,
    /// Relative Frobenius step at which Newton-Kleinman stops.
    pub newton_step_tol: T,
    /// Relative pivot size below which an LU factorization is singular.
    pub singular_tol: T,
    /// Relative pivot size used for numerical rank decisions.
    pub rank_tol: T,
    /// Real-part margin used when classifying eigenvalues.
    pub eig_tol: T,
    /// Positivity margin for the diagonal scaling certificate.
    pub lambda0_tol: T,
}

pub const TOL_SCALE_ENV: &str = "COOPREG_TOL_SCALE";

impl<T: Scalar> Default for NumericPolicy<T> {
    fn default() -> Self {
        T::default_policy()
    }
}

impl<T: Scalar> NumericPolicy<T> {
    /// Multiplies every tolerance field by `factor`; iteration limits are unchanged.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            residual_tol: self.residual_tol * factor,
            pd_tol: self.pd_tol * factor,
            care_residual_tol: self.care_residual_tol * factor,
            newton_max_iter: self.newton_max_iter,
            newton_step_tol: self.newton_step_tol * factor,
            singular_tol: self.singular_tol * factor,
            rank_tol: self.rank_tol * factor,
            eig_tol: self.eig_tol * factor,
            lambda0_tol: self.lambda0_tol * factor,
        }
    }

    /// Default policy, scaled by `COOPREG_TOL_SCALE` when it is set to a positive number.
    pub fn from_env() -> Self {
        let base = Self::default();
        match std::env::var(TOL_SCALE_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
        {
            Some(f) if f.is_finite() && f > 0.0 => base.scaled(T::lit(f)),
            _ => base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("linear operator is singular to working precision")]
    SingularOperator,
    #[error("linear system is rank deficient")]
    RankDeficient,
    #[error("pair is not stabilizable: no stabilizing initial gain found")]
    NotStabilizable,
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("non-finite entries encountered")]
    NonFinite,
}

pub(crate) fn require_square<T: Scalar>(
    m: &crate::Matrix<T>,
    name: &str,
) -> Result<usize, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    Ok(m.nrows())
}
