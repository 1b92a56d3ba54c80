use coopreg::linalg::{char_poly, eigenvalues, is_hurwitz, solve_lyapunov, solve_sylvester, CareProblem};
use coopreg::Matrix;
use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;

fn square(max: usize) -> impl Strategy<Value = Matrix<f64>> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |d| Matrix::from_row_slice(n, n, &d))
    })
}

fn to_na(a: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn horner(c: &[f64], z: Complex<f64>) -> Complex<f64> {
    c.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &k| acc * z + k)
}

proptest! {
    #[test]
    fn char_poly_vanishes_at_eigenvalues(a in square(5)) {
        let c = char_poly(&a);
        prop_assert_eq!(c.len(), a.nrows() + 1);
        prop_assert_eq!(c[a.nrows()], 1.0);
        let scale = 1.0 + to_na(&a).norm();
        for z in to_na(&a).complex_eigenvalues().iter() {
            let bound = 1e-8 * scale.powi(a.nrows() as i32);
            prop_assert!(horner(&c, *z).norm() <= bound);
        }
    }

    #[test]
    fn eigenvalues_match_oracle_trace_and_count(a in square(5)) {
        let ours = eigenvalues(&a);
        prop_assert_eq!(ours.len(), a.nrows());
        let sum: f64 = ours.iter().map(|z| z.re).sum();
        prop_assert!((sum - a.trace()).abs() < 1e-8 * (1.0 + a.trace().abs()));
        let mut ours_re: Vec<f64> = ours.iter().map(|z| z.re).collect();
        let mut oracle_re: Vec<f64> = to_na(&a).complex_eigenvalues().iter().map(|z| z.re).collect();
        ours_re.sort_by(f64::total_cmp);
        oracle_re.sort_by(f64::total_cmp);
        for (x, y) in ours_re.iter().zip(&oracle_re) {
            prop_assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn hurwitz_agrees_with_eigenvalue_signs(a in square(5), shift in -2.0f64..1.0) {
        let shifted = &a + &Matrix::identity(a.nrows()).scale(shift);
        let eig = to_na(&shifted).complex_eigenvalues();
        let margin = eig.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(margin > 1e-6);
        prop_assert_eq!(is_hurwitz(&shifted), eig.iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn lyapunov_solution_satisfies_equation(a in square(5)) {
        let n = a.nrows();
        let stable = &a + &Matrix::identity(n).scale(-5.0);
        let q = Matrix::identity(n);
        let x = solve_lyapunov(&stable, &q).unwrap();
        let r = &(&(&stable.transpose() * &x) + &(&x * &stable)) + &q;
        prop_assert!(r.max_abs() < 1e-10);
        prop_assert!(x.is_symmetric(1e-12));
    }

    #[test]
    fn sylvester_matches_kronecker_oracle(a in square(4), b in square(4)) {
        let (n, m) = (a.nrows(), b.nrows());
        let a = &a + &Matrix::identity(n).scale(5.0);
        let b = &b + &Matrix::identity(m).scale(5.0);
        let c = Matrix::from_fn(n, m, |i, j| (i as f64) - 0.5 * (j as f64));
        let x = solve_sylvester(&a, &b, &c).unwrap();
        let op = DMatrix::<f64>::identity(m, m).kronecker(&to_na(&a))
            + to_na(&b).transpose().kronecker(&DMatrix::<f64>::identity(n, n));
        let rhs = nalgebra::DVector::from_column_slice(to_na(&c).as_slice());
        let oracle = op.lu().solve(&rhs).unwrap();
        for j in 0..m {
            for i in 0..n {
                prop_assert!((x[(i, j)] - oracle[j * n + i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn care_solution_is_stabilizing(a in square(4)) {
        let n = a.nrows();
        let problem = CareProblem::unit_weights(a.clone(), Matrix::identity(n));
        let sol = problem.solve().unwrap();
        prop_assert!(problem.residual(&sol.p).unwrap() < 1e-8 * (1.0 + sol.p.frobenius_norm()));
        prop_assert!(is_hurwitz(&(&a + &sol.gain)));
        let eig = to_na(&sol.p).symmetric_eigenvalues();
        prop_assert!(eig.min() > 0.0);
    }
}
