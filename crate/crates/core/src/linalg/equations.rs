use super::{require_square, LinalgError, Lu, NumericPolicy};
use crate::{Matrix, Scalar};

/// Solves the Sylvester equation `aX + Xb = c` with the default policy.
pub fn solve_sylvester<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    c: &Matrix<T>,
) -> Result<Matrix<T>, LinalgError> {
    solve_sylvester_with(a, b, c, &NumericPolicy::default())
}

/// Solves `aX + Xb = c` through the vectorized system
/// `(I ⊗ a + bᵀ ⊗ I) vec(X) = vec(c)`.
pub fn solve_sylvester_with<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    c: &Matrix<T>,
    policy: &NumericPolicy<T>,
) -> Result<Matrix<T>, LinalgError> {
    let n = require_square(a, "a")?;
    let m = require_square(b, "b")?;
    if c.shape() != (n, m) {
        return Err(LinalgError::DimensionMismatch(format!(
            "c must be {n}x{m}, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    if !c.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if n == 0 || m == 0 {
        return Ok(Matrix::zeros(n, m));
    }
    let op = &Matrix::identity(m).kron(a) + &b.transpose().kron(&Matrix::identity(n));
    let lu = Lu::factor(&op, policy.singular_tol)?;
    let rhs = c.vec();
    let mut x = lu.solve(&rhs);

    // one step of iterative refinement
    let r: Vec<T> = op
        .mul_vec(&x)
        .iter()
        .zip(&rhs)
        .map(|(&ax, &bx)| bx - ax)
        .collect();
    for (xi, di) in x.iter_mut().zip(lu.solve(&r)) {
        *xi += di;
    }

    let sol = Matrix::unvec(n, m, &x);
    let residual = (&(&(a * &sol) + &(&sol * b)) - c).frobenius_norm();
    // backward-error bound, so large but accurate solutions are accepted
    let scale = (a.frobenius_norm() + b.frobenius_norm()) * sol.frobenius_norm() + c.frobenius_norm();
    if !sol.is_finite() || residual > policy.residual_tol * (T::one() + scale) {
        return Err(LinalgError::SingularOperator);
    }
    Ok(sol)
}

/// Solves the continuous Lyapunov equation `aᵀX + Xa + q = 0` with the default policy.
pub fn solve_lyapunov<T: Scalar>(a: &Matrix<T>, q: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    solve_lyapunov_with(a, q, &NumericPolicy::default())
}

/// Solves `aᵀX + Xa + q = 0`. The result is symmetrized when `q` is symmetric.
pub fn solve_lyapunov_with<T: Scalar>(
    a: &Matrix<T>,
    q: &Matrix<T>,
    policy: &NumericPolicy<T>,
) -> Result<Matrix<T>, LinalgError> {
    let x = solve_sylvester_with(&a.transpose(), a, &-q, policy)?;
    let sym_tol = policy.residual_tol * (T::one() + q.max_abs());
    if q.is_symmetric(sym_tol) {
        Ok(x.symmetrize())
    } else {
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn scalar_lyapunov() {
        let x = solve_lyapunov(&m(&[&[-1.0]]), &m(&[&[2.0]])).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_lyapunov() {
        let a = Matrix::<f64>::identity(2).scale(-1.0);
        let x = solve_lyapunov(&a, &Matrix::identity(2)).unwrap();
        assert!(x.max_abs_diff(&Matrix::identity(2).scale(0.5)) < 1e-14);
    }

    #[test]
    fn marginal_lyapunov_is_singular() {
        let s = m(&[&[0.0, 1.0], &[-2.0, 0.0]]);
        assert_eq!(
            solve_lyapunov(&s, &Matrix::identity(2)).unwrap_err(),
            LinalgError::SingularOperator
        );
    }

    #[test]
    fn scalar_sylvester() {
        let x = solve_sylvester(&m(&[&[1.0]]), &m(&[&[1.0]]), &m(&[&[4.0]])).unwrap();
        assert!((x[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_a_identity_b_returns_c() {
        let c = m(&[&[1.0, -2.0, 3.5], &[0.25, 7.0, -1.0]]);
        let x = solve_sylvester(&Matrix::zeros(2, 2), &Matrix::identity(3), &c).unwrap();
        assert!(x.max_abs_diff(&c) < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let err = solve_sylvester(
            &Matrix::<f64>::identity(2),
            &Matrix::identity(2),
            &Matrix::zeros(3, 2),
        )
        .unwrap_err();
        assert!(matches!(err, LinalgError::DimensionMismatch(_)));
    }
}
