//! Continuous algebraic Riccati equation
//! `aᵀP + Pa + q - P b r⁻¹ bᵀ P = 0`.
//!
//! Newton-Kleinman iteration: every step is one Lyapunov solve for the
//! closed loop of the current gain. The first gain comes from Bass's
//! shifted-Lyapunov construction; when that fails (stabilizable but not
//! controllable pairs) a matrix-sign-function estimate of the stabilizing
//! solution provides the starting gain instead.

use super::{
    eigenvalues, is_hurwitz_with, is_positive_definite, require_square, solve_lyapunov_with, LinalgError, Lu,
    NumericPolicy,
};
use crate::{Matrix, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct CareProblem<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub q: Matrix<T>,
    pub r: Matrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CareSolution<T> {
    /// Stabilizing solution.
    pub p: Matrix<T>,
    /// Optimal feedback `K = -r⁻¹bᵀP`, so that `a + bK` is Hurwitz.
    pub gain: Matrix<T>,
    pub residual: T,
    pub iterations: usize,
}

/// Stabilizing solution of the CARE under the default policy.
pub fn solve_care<T: Scalar>(problem: &CareProblem<T>) -> Result<Matrix<T>, LinalgError> {
    problem.solve().map(|s| s.p)
}

impl<T: Scalar> CareProblem<T> {
    /// `a`, `b` with `q = I`, `r = I`.
    pub fn unit_weights(a: Matrix<T>, b: Matrix<T>) -> Self {
        let n = a.nrows();
        let m = b.ncols();
        Self {
            a,
            b,
            q: Matrix::identity(n),
            r: Matrix::identity(m),
        }
    }

    pub fn solve(&self) -> Result<CareSolution<T>, LinalgError> {
        self.solve_with(&NumericPolicy::default())
    }

    pub fn residual(&self, p: &Matrix<T>) -> Result<T, LinalgError> {
        let r_inv = Lu::factor(&self.r, T::lit(1e-13))?.inverse();
        let g = &(&self.b * &r_inv) * &self.b.transpose();
        Ok(self.residual_with_g(p, &g))
    }

    fn residual_with_g(&self, p: &Matrix<T>, g: &Matrix<T>) -> T {
        let at_p = &self.a.transpose() * p;
        let pa = p * &self.a;
        let pgp = &(p * g) * p;
        (&(&(&at_p + &pa) + &self.q) - &pgp).frobenius_norm()
    }

    fn validate(&self) -> Result<(), LinalgError> {
        let n = require_square(&self.a, "a")?;
        let m = require_square(&self.r, "r")?;
        require_square(&self.q, "q")?;
        if self.b.shape() != (n, m) || self.q.nrows() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "CARE shapes a {:?}, b {:?}, q {:?}, r {:?}",
                self.a.shape(),
                self.b.shape(),
                self.q.shape(),
                self.r.shape()
            )));
        }
        if !self.b.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let tol = T::lit(1e3) * T::epsilon();
        if !self.q.is_symmetric(tol * self.q.max_abs().max(T::one()))
            || !self.r.is_symmetric(tol * self.r.max_abs().max(T::one()))
        {
            return Err(LinalgError::DimensionMismatch(
                "q and r must be symmetric".into(),
            ));
        }
        Ok(())
    }

    pub fn solve_with(&self, policy: &NumericPolicy<T>) -> Result<CareSolution<T>, LinalgError> {
        self.validate()?;
        if !is_positive_definite(&self.r, policy.pd_tol) {
            return Err(LinalgError::DimensionMismatch(
                "r must be positive definite".into(),
            ));
        }
        let r_inv = Lu::factor(&self.r, policy.singular_tol)?.inverse();
        let bt = self.b.transpose();
        let r_inv_bt = &r_inv * &bt;
        let g = &self.b * &r_inv_bt;

        let mut gain = self
            .initial_gain(&g, &r_inv_bt, policy)
            .ok_or(LinalgError::NotStabilizable)?;

        let mut p_prev: Option<Matrix<T>> = None;
        let mut iterations = 0;
        while iterations < policy.newton_max_iter {
            iterations += 1;
            let closed = &self.a + &(&self.b * &gain);
            let weight = &self.q + &(&(&gain.transpose() * &self.r) * &gain);
            let p = match solve_lyapunov_with(&closed, &weight, policy) {
                Ok(p) => p.symmetrize(),
                Err(_) => break,
            };
            gain = -&(&r_inv_bt * &p);
            let step = p_prev
                .as_ref()
                .map(|prev| (&p - prev).frobenius_norm());
            let scale = p.frobenius_norm().max(T::one());
            p_prev = Some(p);
            if let Some(step) = step {
                if step <= policy.newton_step_tol * scale {
                    break;
                }
            }
        }
        let p = p_prev.ok_or(LinalgError::NotStabilizable)?;
        let residual = self.residual_with_g(&p, &g);
        let bound = policy.care_residual_tol * p.frobenius_norm().max(T::one());
        let closed = &self.a + &(&self.b * &gain);
        // a stalled iteration is still accepted if it already meets the residual bound
        if !(residual <= bound) || !is_hurwitz_with(&closed, policy) {
            return Err(LinalgError::NoConvergence {
                iterations,
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(CareSolution {
            p,
            gain,
            residual,
            iterations,
        })
    }

    fn initial_gain(
        &self,
        g: &Matrix<T>,
        r_inv_bt: &Matrix<T>,
        policy: &NumericPolicy<T>,
    ) -> Option<Matrix<T>> {
        let n = self.a.nrows();
        let m = self.b.ncols();
        if is_hurwitz_with(&self.a, policy) {
            return Some(Matrix::zeros(m, n));
        }
        let certify = |k: Matrix<T>| {
            let closed = &self.a + &(&self.b * &k);
            is_hurwitz_with(&closed, policy).then_some(k)
        };
        if let Some(k) = self.bass_gain(policy).and_then(certify) {
            return Some(k);
        }
        self.sign_function_gain(g, r_inv_bt, policy).and_then(certify)
    }

    /// Bass: with `a + βI` antistable, solve `(a+βI)Z + Z(a+βI)ᵀ = 2bbᵀ`;
    /// then `a - bbᵀZ⁻¹` has every eigenvalue on `Re = -β`. The smallest
    /// admissible shift keeps `Z` best conditioned.
    fn bass_gain(&self, policy: &NumericPolicy<T>) -> Option<Matrix<T>> {
        let n = self.a.nrows();
        let min_re = eigenvalues(&self.a)
            .iter()
            .map(|l| l.re)
            .fold(T::infinity(), T::min);
        if !min_re.is_finite() {
            return None;
        }
        let beta = T::one() + (-min_re).max(T::zero());
        let shifted = &self.a + &Matrix::identity(n).scale(beta);
        let rhs = (&self.b * &self.b.transpose()).scale(T::lit(2.0));
        let z = solve_lyapunov_with(&-&shifted.transpose(), &rhs, policy).ok()?;
        if !is_positive_definite(&z, policy.pd_tol) {
            return None;
        }
        let z_inv = Lu::factor(&z, policy.singular_tol).ok()?.inverse();
        Some(-&(&self.b.transpose() * &z_inv))
    }

    /// Sign-function estimate of the stabilizing solution from the
    /// Hamiltonian `[[a, -g], [-q, -aᵀ]]`.
    fn sign_function_gain(
        &self,
        g: &Matrix<T>,
        r_inv_bt: &Matrix<T>,
        policy: &NumericPolicy<T>,
    ) -> Option<Matrix<T>> {
        let n = self.a.nrows();
        let at = self.a.transpose();
        let mut z = Matrix::from_blocks(&[&[&self.a, &-g], &[&-&self.q, &-&at]]);
        let two_n = T::from_usize_lossy(2 * n);
        let half = T::lit(0.5);
        let mut converged = false;
        let mut prev_step = T::infinity();
        for _ in 0..100 {
            let lu = Lu::factor(&z, policy.singular_tol).ok()?;
            let c = (-lu.ln_abs_det() / two_n).exp();
            let next = (&z.scale(c) + &lu.inverse().scale(T::one() / c)).scale(half);
            let step = (&next - &z).frobenius_norm();
            let scale = next.frobenius_norm().max(T::one());
            z = next;
            if !z.is_finite() {
                return None;
            }
            if step <= T::lit(1e3) * T::epsilon() * scale {
                converged = true;
                break;
            }
            // rounding noise on ill-conditioned Hamiltonians stalls the step;
            // the estimate only seeds Newton-Kleinman, so a stall is accepted
            if step >= prev_step && step <= T::lit(1e-6) * scale {
                converged = true;
                break;
            }
            prev_step = step;
        }
        if !converged {
            return None;
        }
        let w11 = z.submatrix(0, 0, n, n);
        let w12 = z.submatrix(0, n, n, n);
        let w21 = z.submatrix(n, 0, n, n);
        let w22 = z.submatrix(n, n, n, n);
        let eye = Matrix::identity(n);
        let lhs = Matrix::vstack(&[&w12, &(&w22 + &eye)]);
        let rhs = -&Matrix::vstack(&[&(&w11 + &eye), &w21]);
        let lt = lhs.transpose();
        let normal = &lt * &lhs;
        let p = Lu::factor(&normal, policy.singular_tol)
            .ok()?
            .solve_matrix(&(&lt * &rhs))
            .symmetrize();
        Some(-&(r_inv_bt * &p))
    }
}
