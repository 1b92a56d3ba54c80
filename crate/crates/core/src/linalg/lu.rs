use super::LinalgError;
use crate::{Matrix, Scalar};

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    swaps: usize,
}

impl<T: Scalar> Lu<T> {
    /// Factors `a`. A pivot smaller than `singular_tol * max|a|` is reported
    /// as [`LinalgError::SingularOperator`].
    pub fn factor(a: &Matrix<T>, singular_tol: T) -> Result<Self, LinalgError> {
        let n = super::require_square(a, "LU operand")?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let threshold = singular_tol * a.max_abs().max(T::min_positive_value());
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= threshold {
                return Err(LinalgError::SingularOperator);
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
                swaps += 1;
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, swaps })
    }

    pub fn order(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.order();
        assert_eq!(b.len(), n, "right-hand side length");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_matrix(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(b.nrows(), b.ncols());
        let mut col = vec![T::zero(); b.nrows()];
        for j in 0..b.ncols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            for (i, v) in self.solve(&col).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix<T> {
        self.solve_matrix(&Matrix::identity(self.order()))
    }

    /// `ln |det A|`
    pub fn ln_abs_det(&self) -> T {
        (0..self.order()).map(|i| self.lu[(i, i)].abs().ln()).sum()
    }

    pub fn det(&self) -> T {
        let mut d = (0..self.order()).fold(T::one(), |acc, i| acc * self.lu[(i, i)]);
        if self.swaps % 2 == 1 {
            d = -d;
        }
        d
    }
}

/// Solves `A x = b` for any shape of `A`.
///
/// Square systems use LU. Wide systems return the minimum-norm solution
/// `Aᵀ(AAᵀ)⁻¹b`; tall systems return the least-squares solution, so the
/// caller must check the residual to detect inconsistency.
pub fn solve_linear_system<T: Scalar>(
    a: &Matrix<T>,
    b: &[T],
    singular_tol: T,
) -> Result<Vec<T>, LinalgError> {
    if a.nrows() != b.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "system has {} rows but right-hand side has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    let at = a.transpose();
    match a.nrows().cmp(&a.ncols()) {
        std::cmp::Ordering::Equal => Ok(Lu::factor(a, singular_tol)?.solve(b)),
        std::cmp::Ordering::Less => {
            let gram = a * &at;
            let y = Lu::factor(&gram, singular_tol)
                .map_err(|_| LinalgError::RankDeficient)?
                .solve(b);
            Ok(at.mul_vec(&y))
        }
        std::cmp::Ordering::Greater => {
            let gram = &at * a;
            let rhs = at.mul_vec(b);
            Ok(Lu::factor(&gram, singular_tol)
                .map_err(|_| LinalgError::RankDeficient)?
                .solve(&rhs))
        }
    }
}
