use num_complex::Complex;

use super::{solve_lyapunov_with, NumericPolicy};
use crate::{Matrix, Scalar};

/// Monic characteristic polynomial `det(λI - a)` by the Faddeev-LeVerrier
/// recurrence, returned in ascending order `[c0, c1, ..., c_{n-1}, 1]`.
pub fn char_poly<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    assert!(a.is_square(), "characteristic polynomial of non-square matrix");
    let n = a.nrows();
    let mut coeffs = vec![T::zero(); n + 1];
    coeffs[n] = T::one();
    let mut m = Matrix::zeros(n, n);
    for k in 1..=n {
        m = &(a * &m) + &Matrix::identity(n).scale(coeffs[n - k + 1]);
        coeffs[n - k] = -(a * &m).trace() / T::from_usize_lossy(k);
    }
    coeffs
}

/// Controllable companion matrix of a monic polynomial `[c0, ..., c_{n-1}, 1]`:
/// ones on the superdiagonal and `-c` along the last row.
pub fn companion<T: Scalar>(coeffs: &[T]) -> Matrix<T> {
    assert!(!coeffs.is_empty(), "empty polynomial");
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let mut m = Matrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        m[(i, i + 1)] = T::one();
    }
    if n > 0 {
        for j in 0..n {
            m[(n - 1, j)] = -coeffs[j] / lead;
        }
    }
    m
}

fn horner<T: Scalar>(coeffs: &[T], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::new(T::zero(), T::zero());
    let mut dp = p;
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + Complex::new(c, T::zero());
    }
    (p, dp)
}

/// Complex roots of a polynomial given in ascending coefficient order,
/// found with the Aberth-Ehrlich simultaneous iteration.
///
/// Simple roots converge to working precision; a root of multiplicity k is
/// only accurate to about `eps^(1/k)`.
pub fn poly_roots<T: Scalar>(coeffs: &[T]) -> Vec<Complex<T>> {
    let mut coeffs: Vec<T> = coeffs.to_vec();
    while coeffs.len() > 1 && *coeffs.last().unwrap() == T::zero() {
        coeffs.pop();
    }
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    for c in coeffs.iter_mut() {
        *c /= lead;
    }
    // strip roots at exactly zero
    let zeros = coeffs.iter().take_while(|c| **c == T::zero()).count();
    let reduced = &coeffs[zeros..];
    let deg = reduced.len() - 1;
    let mut roots = vec![Complex::new(T::zero(), T::zero()); zeros];
    if deg == 0 {
        return roots;
    }

    let center = -reduced[deg - 1] / T::from_usize_lossy(deg);
    let radius = (0..deg)
        .map(|k| {
            reduced[k]
                .abs()
                .powf(T::one() / T::from_usize_lossy(deg - k))
        })
        .fold(T::zero(), |a, b| a.max(b))
        .max(T::lit(0.5))
        * T::lit(2.0);
    let two_pi = T::lit(std::f64::consts::TAU);
    let mut z: Vec<Complex<T>> = (0..deg)
        .map(|k| {
            let theta = two_pi * T::from_usize_lossy(k) / T::from_usize_lossy(deg) + T::lit(0.4);
            Complex::new(center, T::zero()) + Complex::from_polar(radius, theta)
        })
        .collect();

    let eps = T::epsilon();
    for _ in 0..2000 {
        let mut max_step = T::zero();
        for k in 0..deg {
            let (p, dp) = horner(reduced, z[k]);
            if p.norm() == T::zero() {
                continue;
            }
            let ratio = p / dp;
            let repulsion = (0..deg)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
            let denom = Complex::new(T::one(), T::zero()) - ratio * repulsion;
            let step = if denom.norm() > T::zero() && denom.norm().is_finite() {
                ratio / denom
            } else {
                ratio
            };
            if !step.norm().is_finite() {
                continue;
            }
            z[k] -= step;
            max_step = max_step.max(step.norm() / (T::one() + z[k].norm()));
        }
        if max_step <= eps * T::lit(4.0) {
            break;
        }
    }
    roots.extend(z);
    roots
}

/// Eigenvalues of a small square matrix as roots of its characteristic polynomial.
pub fn eigenvalues<T: Scalar>(a: &Matrix<T>) -> Vec<Complex<T>> {
    poly_roots(&char_poly(a))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    assert!(a.is_square(), "symmetric eigenproblem on non-square matrix");
    let n = a.nrows();
    let mut m = a.symmetrize();
    let scale = m.frobenius_norm().max(T::min_positive_value());
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<T>()
            .sqrt();
        if off <= T::epsilon() * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// Lower Cholesky factor, or `None` if a pivot falls at or below
/// `tol * max(1, max diagonal)`.
pub fn cholesky<T: Scalar>(a: &Matrix<T>, tol: T) -> Option<Matrix<T>> {
    if !a.is_square() || !a.is_finite() {
        return None;
    }
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(T::one(), |x, y| x.max(y));
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol * scale || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

pub fn is_positive_definite<T: Scalar>(a: &Matrix<T>, tol: T) -> bool {
    let sym_tol = T::lit(1e3) * T::epsilon() * a.max_abs().max(T::one());
    a.is_symmetric(sym_tol) && cholesky(a, tol).is_some()
}

/// Hurwitz test with the default policy.
pub fn is_hurwitz<T: Scalar>(a: &Matrix<T>) -> bool {
    is_hurwitz_with(a, &NumericPolicy::default())
}

/// True iff `aᵀX + Xa + I = 0` has a positive-definite solution, which
/// holds exactly when every eigenvalue of `a` has negative real part.
pub fn is_hurwitz_with<T: Scalar>(a: &Matrix<T>, policy: &NumericPolicy<T>) -> bool {
    if !a.is_square() || !a.is_finite() {
        return false;
    }
    if a.nrows() == 0 {
        return true;
    }
    match solve_lyapunov_with(a, &Matrix::identity(a.nrows()), policy) {
        Ok(x) => is_positive_definite(&x, policy.pd_tol),
        Err(_) => false,
    }
}

/// Numerical rank of a complex matrix given as rows, by Gaussian
/// elimination with complete pivoting. Pivots at or below
/// `tol * max(1, max|entry|)` count as zero.
pub fn complex_rank<T: Scalar>(rows: &[Vec<Complex<T>>], tol: T) -> usize {
    let mut m: Vec<Vec<Complex<T>>> = rows.to_vec();
    let nr = m.len();
    let nc = m.first().map_or(0, |r| r.len());
    let scale = m
        .iter()
        .flatten()
        .fold(T::one(), |acc, z| acc.max(z.norm()));
    let threshold = tol * scale;
    let mut rank = 0;
    let mut col_perm: Vec<usize> = (0..nc).collect();
    for k in 0..nr.min(nc) {
        let mut best = (k, k, -T::one());
        for (i, row) in m.iter().enumerate().skip(k) {
            for jj in k..nc {
                let v = row[col_perm[jj]].norm();
                if v > best.2 {
                    best = (i, jj, v);
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        m.swap(k, best.0);
        col_perm.swap(k, best.1);
        let pc = col_perm[k];
        let pivot = m[k][pc];
        for i in k + 1..nr {
            let f = m[i][pc] / pivot;
            if f.norm() == T::zero() {
                continue;
            }
            for jj in k..nc {
                let c = col_perm[jj];
                let sub = f * m[k][c];
                m[i][c] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

/// Numerical rank of a real matrix.
pub fn rank<T: Scalar>(a: &Matrix<T>, tol: T) -> usize {
    let rows: Vec<Vec<Complex<T>>> = (0..a.nrows())
        .map(|i| {
            a.row_slice(i)
                .iter()
                .map(|&x| Complex::new(x, T::zero()))
                .collect()
        })
        .collect();
    complex_rank(&rows, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(char_poly(&m(&[&[0.0, 1.0], &[-2.0, 0.0]])), vec![2.0, 0.0, 1.0]);
        assert_eq!(char_poly(&m(&[&[0.0]])), vec![0.0, 1.0]);
        assert_eq!(char_poly(&Matrix::<f64>::identity(2)), vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn companion_of_harmonic() {
        let c = companion(&[2.0, 0.0, 1.0]);
        assert_eq!(c, m(&[&[0.0, 1.0], &[-2.0, 0.0]]));
    }

    #[test]
    fn roots_of_harmonic_polynomial() {
        let r = poly_roots(&[2.0f64, 0.0, 1.0]);
        assert_eq!(r.len(), 2);
        for z in r {
            assert!(z.re.abs() < 1e-12);
            assert!((z.im.abs() - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn roots_with_zero_and_repeated() {
        // λ²(λ-1)²
        let r = poly_roots(&[0.0f64, 0.0, 1.0, -2.0, 1.0]);
        assert_eq!(r.len(), 4);
        let near_one = r.iter().filter(|z| (z.re - 1.0).abs() < 1e-6).count();
        let at_zero = r.iter().filter(|z| z.norm() == 0.0).count();
        assert_eq!((near_one, at_zero), (2, 2));
    }

    #[test]
    fn jacobi_two_by_two() {
        let e = symmetric_eigenvalues(&m(&[&[4.0, -1.0], &[-1.0, 2.0]]));
        assert!((e[0] - (3.0 - 2f64.sqrt())).abs() < 1e-14);
        assert!((e[1] - (3.0 + 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&m(&[&[0.0, 1.0], &[-1.0, -1.0]])));
        assert!(!is_hurwitz(&m(&[&[0.0, 1.0], &[-2.0, 0.0]])));
        // S + LF with the published observer gain
        assert!(is_hurwitz(&m(&[&[0.0, 1.0], &[-2.0, -3.0]])));
        assert!(!is_hurwitz(&m(&[&[1.0, 0.0], &[0.0, -1.0]])));
    }

    #[test]
    fn rank_of_rank_one() {
        assert_eq!(rank(&m(&[&[1.0, 2.0], &[2.0, 4.0]]), 1e-10), 1);
        assert_eq!(rank(&Matrix::<f64>::identity(3), 1e-10), 3);
        assert_eq!(rank(&Matrix::<f64>::zeros(2, 3), 1e-10), 0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky(&m(&[&[1.0, 2.0], &[2.0, 1.0]]), 1e-10).is_none());
        assert!(cholesky(&m(&[&[2.0, 1.0], &[1.0, 2.0]]), 1e-10).is_some());
    }
}
