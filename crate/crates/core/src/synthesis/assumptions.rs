//! Rank tests on the nominal problem data.

use num_complex::Complex;
use serde::Serialize;

use super::{Exosystem, LtiSubsystem};
use crate::linalg::{complex_rank, eigenvalues, rank, NumericPolicy};
use crate::{Matrix, Scalar};

/// Per-assumption outcome of [`check_assumptions`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    /// No eigenvalue of `S` has negative real part.
    pub exosystem_antistable: bool,
    /// `(A_i, B_i)` stabilizable, per agent.
    pub stabilizable: Vec<bool>,
    /// `(S, F)` detectable.
    pub detectable: bool,
    /// `rank [A_i - λI, B_i; C_i, 0] = n_i + p_i` for all `λ ∈ σ(S)`, per agent.
    pub transmission: Vec<bool>,
}

impl AssumptionReport {
    pub fn a2(&self) -> bool {
        self.exosystem_antistable
    }

    pub fn a3(&self) -> bool {
        self.stabilizable.iter().all(|&b| b)
    }

    pub fn a4(&self) -> bool {
        self.detectable
    }

    pub fn a5(&self) -> bool {
        self.transmission.iter().all(|&b| b)
    }

    /// Assumptions 3-5; the spectral condition on `S` is advisory only.
    pub fn required_hold(&self) -> bool {
        self.a3() && self.a4() && self.a5()
    }

    pub fn all_hold(&self) -> bool {
        self.a2() && self.required_hold()
    }
}

fn complex_block<T: Scalar>(
    top_left: &Matrix<T>,
    shift: Complex<T>,
    extra: &[(&Matrix<T>, usize, usize)],
    rows: usize,
    cols: usize,
) -> Vec<Vec<Complex<T>>> {
    let mut out = vec![vec![Complex::new(T::zero(), T::zero()); cols]; rows];
    for i in 0..top_left.nrows() {
        for j in 0..top_left.ncols() {
            out[i][j] = Complex::new(top_left[(i, j)], T::zero());
        }
        out[i][i] -= shift;
    }
    for (m, r0, c0) in extra {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[r0 + i][c0 + j] = Complex::new(m[(i, j)], T::zero());
            }
        }
    }
    out
}

/// PBH test: `rank [A - λI, B] = n` at every eigenvalue of `A` with
/// nonnegative real part.
pub fn is_stabilizable<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, policy: &NumericPolicy<T>) -> bool {
    let n = a.nrows();
    eigenvalues(a)
        .into_iter()
        .filter(|l| l.re >= -policy.eig_tol)
        .all(|l| {
            let m = complex_block(a, l, &[(b, 0, n)], n, n + b.ncols());
            complex_rank(&m, policy.rank_tol) == n
        })
}

/// Dual PBH test on `(Aᵀ, Cᵀ)`.
pub fn is_detectable<T: Scalar>(a: &Matrix<T>, c: &Matrix<T>, policy: &NumericPolicy<T>) -> bool {
    is_stabilizable(&a.transpose(), &c.transpose(), policy)
}

/// Rank of the observability matrix `[C; CA; ...; CA^{n-1}]` equals `n`.
pub fn is_observable<T: Scalar>(a: &Matrix<T>, c: &Matrix<T>, policy: &NumericPolicy<T>) -> bool {
    let n = a.nrows();
    let mut blocks = Vec::with_capacity(n);
    let mut term = c.clone();
    for _ in 0..n {
        let next = &term * a;
        blocks.push(term);
        term = next;
    }
    let refs: Vec<&Matrix<T>> = blocks.iter().collect();
    rank(&Matrix::vstack(&refs), policy.rank_tol) == n
}

fn transmission_holds<T: Scalar>(
    sub: &LtiSubsystem<T>,
    spectrum: &[Complex<T>],
    policy: &NumericPolicy<T>,
) -> bool {
    let p = &sub.nominal;
    let (n, m, pp) = (p.n(), p.m(), p.p());
    spectrum.iter().all(|&l| {
        let mat = complex_block(&p.a, l, &[(&p.b, 0, n), (&p.c, n, 0)], n + pp, n + m);
        complex_rank(&mat, policy.rank_tol) == n + pp
    })
}

/// Evaluates assumptions 2-5 on nominal matrices.
pub fn check_assumptions<T: Scalar>(
    subsystems: &[LtiSubsystem<T>],
    exosystem: &Exosystem<T>,
    policy: &NumericPolicy<T>,
) -> AssumptionReport {
    let spectrum = eigenvalues(&exosystem.s);
    AssumptionReport {
        exosystem_antistable: spectrum.iter().all(|l| l.re >= -policy.eig_tol),
        stabilizable: subsystems
            .iter()
            .map(|s| is_stabilizable(&s.nominal.a, &s.nominal.b, policy))
            .collect(),
        detectable: is_detectable(&exosystem.s, &exosystem.f, policy),
        transmission: subsystems
            .iter()
            .map(|s| transmission_holds(s, &spectrum, policy))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::PlantMatrices;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    fn example_agent(varsigma: f64) -> LtiSubsystem<f64> {
        LtiSubsystem::new(PlantMatrices {
            a: m(&[&[0.0, 1.0], &[0.0, 0.0]]),
            b: m(&[&[0.0], &[2.0]]),
            c: m(&[&[1.0, 0.0]]),
            d: m(&[&[0.0, 2.0]]),
            e: m(&[&[varsigma, 0.0], &[0.0, 1.0]]),
        })
    }

    fn example_exo() -> Exosystem<f64> {
        Exosystem {
            s: m(&[&[0.0, 1.0], &[-2.0, 0.0]]),
            f: m(&[&[0.0, -2.0]]),
            v0: vec![1.0, 0.0],
        }
    }

    #[test]
    fn example_network_satisfies_all() {
        let subs: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&s| example_agent(s)).collect();
        let r = check_assumptions(&subs, &example_exo(), &NumericPolicy::default());
        assert!(r.all_hold(), "{r:?}");
    }

    #[test]
    fn stable_exosystem_fails_a2() {
        let exo = Exosystem {
            s: m(&[&[-1.0]]),
            f: m(&[&[1.0]]),
            v0: vec![1.0],
        };
        let sub = LtiSubsystem::new(PlantMatrices {
            a: m(&[&[0.0]]),
            b: m(&[&[1.0]]),
            c: m(&[&[1.0]]),
            d: m(&[&[0.0]]),
            e: m(&[&[0.0]]),
        });
        let r = check_assumptions(&[sub], &exo, &NumericPolicy::default());
        assert!(!r.a2());
        assert!(r.required_hold());
    }

    #[test]
    fn zero_output_map_fails_a5() {
        let mut sub = example_agent(2.0);
        sub.nominal.c = m(&[&[0.0, 0.0]]);
        let r = check_assumptions(&[sub], &example_exo(), &NumericPolicy::default());
        assert!(!r.a5());
    }

    #[test]
    fn pbh_examples() {
        let p = NumericPolicy::default();
        assert!(!is_stabilizable(&m(&[&[1.0, 0.0], &[0.0, 2.0]]), &m(&[&[1.0], &[0.0]]), &p));
        assert!(is_stabilizable(&m(&[&[1.0, 0.0], &[0.0, -2.0]]), &m(&[&[1.0], &[0.0]]), &p));
        assert!(!is_detectable(&example_exo().s, &m(&[&[0.0, 0.0]]), &p));
        assert!(is_observable(&m(&[&[0.0, 1.0], &[0.0, 0.0]]), &m(&[&[1.0, 0.0]]), &p));
        assert!(!is_observable(&m(&[&[0.0, 1.0], &[0.0, 0.0]]), &m(&[&[0.0, 1.0]]), &p));
    }
}
