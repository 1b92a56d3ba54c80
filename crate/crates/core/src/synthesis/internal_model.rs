use serde::Serialize;

use crate::linalg::{char_poly, companion};
use crate::{Matrix, Scalar};

/// p-copy internal model `(G1, G2) = (diag(β,…,β), diag(σ,…,σ))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct InternalModel<T> {
    #[serde(serialize_with = "crate::matrix::serialize_shaped")]
    pub beta: Matrix<T>,
    #[serde(serialize_with = "crate::matrix::serialize_shaped")]
    pub sigma: Matrix<T>,
    pub copies: usize,
    #[serde(serialize_with = "crate::matrix::serialize_shaped")]
    pub g1: Matrix<T>,
    #[serde(serialize_with = "crate::matrix::serialize_shaped")]
    pub g2: Matrix<T>,
}

impl<T: Scalar> InternalModel<T> {
    /// Assembles the block-diagonal pair from an arbitrary `(β, σ)`.
    pub fn from_pair(beta: Matrix<T>, sigma: Matrix<T>, copies: usize) -> Self {
        let g1 = Matrix::block_diag(&vec![&beta; copies]);
        let g2 = Matrix::block_diag(&vec![&sigma; copies]);
        Self {
            beta,
            sigma,
            copies,
            g1,
            g2,
        }
    }

    /// Order of the compensator state, `p · q`.
    pub fn order(&self) -> usize {
        self.g1.nrows()
    }
}

/// β is the companion matrix of the characteristic polynomial of `s` and
/// σ the last unit vector; the pair is controllable by construction and the
/// minimal polynomial of a companion matrix equals its characteristic
/// polynomial.
pub fn build_internal_model<T: Scalar>(s: &Matrix<T>, copies: usize) -> InternalModel<T> {
    let beta = companion(&char_poly(s));
    let q = beta.nrows();
    let mut sigma = Matrix::zeros(q, 1);
    if q > 0 {
        sigma[(q - 1, 0)] = T::one();
    }
    InternalModel::from_pair(beta, sigma, copies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rank, NumericPolicy};

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn harmonic_single_copy() {
        let im = build_internal_model(&m(&[&[0.0, 1.0], &[-2.0, 0.0]]), 1);
        assert_eq!(im.g1, m(&[&[0.0, 1.0], &[-2.0, 0.0]]));
        assert_eq!(im.g2, m(&[&[0.0], &[1.0]]));
    }

    #[test]
    fn scalar_zero() {
        let im = build_internal_model(&m(&[&[0.0]]), 1);
        assert_eq!(im.g1, m(&[&[0.0]]));
        assert_eq!(im.g2, m(&[&[1.0]]));
    }

    #[test]
    fn derogatory_exosystem_uses_characteristic_polynomial() {
        let im = build_internal_model(&Matrix::<f64>::zeros(2, 2), 1);
        assert_eq!(im.beta, m(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert_eq!(im.sigma, m(&[&[0.0], &[1.0]]));
    }

    #[test]
    fn copies_are_block_diagonal_and_controllable() {
        let s = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, -3.0, 2.0]]);
        let im = build_internal_model(&s, 2);
        assert_eq!(im.g1.shape(), (6, 6));
        assert_eq!(im.g2.shape(), (6, 2));
        assert_eq!(im.g1.submatrix(3, 3, 3, 3), im.beta);
        assert_eq!(im.g1.submatrix(0, 3, 3, 3).max_abs(), 0.0);
        let ctrb = Matrix::hstack(&[&im.sigma, &(&im.beta * &im.sigma), &(&(&im.beta * &im.beta) * &im.sigma)]);
        assert_eq!(rank(&ctrb, NumericPolicy::<f64>::default().rank_tol), 3);
        assert_eq!(char_poly(&im.beta), char_poly(&s));
    }
}
