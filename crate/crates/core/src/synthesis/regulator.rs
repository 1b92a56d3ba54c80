use serde::Serialize;

use super::{PlantMatrices, SynthesisError};
use crate::linalg::{solve_linear_system, LinalgError, NumericPolicy};
use crate::{Matrix, Scalar};

/// `(X, U)` with `XS = AX + BU + E` and `0 = CX + D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct RegulatorSolution<T> {
    #[serde(serialize_with = "crate::matrix::serialize_shaped")]
    pub x: Matrix<T>,
    #[serde(serialize_with = "crate::matrix::serialize_shaped")]
    pub u: Matrix<T>,
}

impl<T: Scalar> RegulatorSolution<T> {
    /// Frobenius residuals of the two regulator identities.
    pub fn residuals(&self, plant: &PlantMatrices<T>, s: &Matrix<T>) -> (T, T) {
        let r1 = &(&(&self.x * s) - &(&plant.a * &self.x)) - &(&(&plant.b * &self.u) + &plant.e);
        let r2 = &(&plant.c * &self.x) + &plant.d;
        (r1.frobenius_norm(), r2.frobenius_norm())
    }
}

/// Solves the regulator equations as one linear system in `(vec X, vec U)`:
///
/// ```text
/// [ Sᵀ⊗I - I⊗A   -I⊗B ] [vec X]   [ vec E ]
/// [ I⊗C           0   ] [vec U] = [-vec D ]
/// ```
///
/// When there are more inputs than outputs the minimum-norm solution is returned.
pub fn solve_regulator_equations<T: Scalar>(
    plant: &PlantMatrices<T>,
    s: &Matrix<T>,
    policy: &NumericPolicy<T>,
) -> Result<RegulatorSolution<T>, SynthesisError> {
    let q = s.nrows();
    plant.validate(q)?;
    let (n, m, p) = (plant.n(), plant.m(), plant.p());
    let iq = Matrix::identity(q);
    let top_left = &s.transpose().kron(&Matrix::identity(n)) - &iq.kron(&plant.a);
    let top_right = -&iq.kron(&plant.b);
    let bottom_left = iq.kron(&plant.c);
    let bottom_right = Matrix::zeros(p * q, m * q);
    let op = Matrix::from_blocks(&[&[&top_left, &top_right], &[&bottom_left, &bottom_right]]);
    let mut rhs = plant.e.vec();
    rhs.extend(plant.d.vec().into_iter().map(|x| -x));

    let sol = match solve_linear_system(&op, &rhs, policy.singular_tol) {
        Ok(x) => x,
        Err(LinalgError::RankDeficient) if m > p => return Err(SynthesisError::NonUnique),
        Err(LinalgError::SingularOperator) | Err(LinalgError::RankDeficient) => {
            return Err(SynthesisError::NoSolution)
        }
        Err(e) => return Err(e.into()),
    };
    let x = Matrix::unvec(n, q, &sol[..n * q]);
    let u = Matrix::unvec(m, q, &sol[n * q..]);
    let solution = RegulatorSolution { x, u };

    let (r1, r2) = solution.residuals(plant, s);
    let scale = T::one() + plant.e.frobenius_norm() + plant.d.frobenius_norm();
    let bound = policy.care_residual_tol * scale;
    if !(r1 <= bound && r2 <= bound) {
        return Err(SynthesisError::NoSolution);
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    fn harmonic() -> Matrix<f64> {
        m(&[&[0.0, 1.0], &[-2.0, 0.0]])
    }

    fn example_plant(varsigma: f64) -> PlantMatrices<f64> {
        PlantMatrices {
            a: m(&[&[0.0, 1.0], &[0.0, 0.0]]),
            b: m(&[&[0.0], &[2.0]]),
            c: m(&[&[1.0, 0.0]]),
            d: m(&[&[0.0, 2.0]]),
            e: m(&[&[varsigma, 0.0], &[0.0, 1.0]]),
        }
    }

    #[test]
    fn example_agent_closed_form() {
        // Hand elimination: CX + D = 0 fixes row 1 of X; the first row of the
        // Sylvester identity then fixes row 2, and the second fixes U.
        for varsigma in [1.0, 1.7, 3.0] {
            let sol =
                solve_regulator_equations(&example_plant(varsigma), &harmonic(), &NumericPolicy::default())
                    .unwrap();
            let x = m(&[&[0.0, -2.0], &[4.0 - varsigma, 0.0]]);
            let u = m(&[&[0.0, (3.0 - varsigma) / 2.0]]);
            assert!(sol.x.max_abs_diff(&x) < 1e-12);
            assert!(sol.u.max_abs_diff(&u) < 1e-12);
            let (r1, r2) = sol.residuals(&example_plant(varsigma), &harmonic());
            assert!(r1 <= 1e-10 && r2 <= 1e-10);
        }
    }

    #[test]
    fn zero_forcing_gives_zero_solution() {
        let mut plant = example_plant(0.0);
        plant.e = Matrix::zeros(2, 2);
        plant.d = Matrix::zeros(1, 2);
        let sol = solve_regulator_equations(&plant, &harmonic(), &NumericPolicy::default()).unwrap();
        assert_eq!(sol.x.max_abs(), 0.0);
        assert_eq!(sol.u.max_abs(), 0.0);
    }

    #[test]
    fn no_input_cannot_regulate() {
        let plant = PlantMatrices {
            a: harmonic(),
            b: Matrix::zeros(2, 1),
            c: m(&[&[1.0, 0.0]]),
            d: m(&[&[0.0, 2.0]]),
            e: Matrix::zeros(2, 2),
        };
        assert_eq!(
            solve_regulator_equations(&plant, &harmonic(), &NumericPolicy::default()).unwrap_err(),
            SynthesisError::NoSolution
        );
    }

    #[test]
    fn extra_inputs_take_minimum_norm() {
        let mut plant = example_plant(2.0);
        plant.b = m(&[&[0.0, 0.0], &[2.0, 2.0]]);
        let sol = solve_regulator_equations(&plant, &harmonic(), &NumericPolicy::default()).unwrap();
        // the two identical input channels share the load equally
        assert!((sol.u[(0, 1)] - sol.u[(1, 1)]).abs() < 1e-12);
        assert!((sol.u[(0, 1)] - 0.25).abs() < 1e-12);
    }
}
