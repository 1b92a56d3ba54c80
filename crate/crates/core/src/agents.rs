//! Vector fields of the exosystem, the three observers and the three
//! control laws. All functions are pure; neighbor data is passed as
//! `(a_ij, value_j)` pairs.

use crate::{Matrix, Scalar};

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `v̇ = S v`.
pub fn exosystem_deriv<T: Scalar>(s: &Matrix<T>, v: &[T]) -> Vec<T> {
    s.mul_vec(v)
}

/// Informed follower: `ξ̇ = Sξ + L(Fξ - y_v)`.
pub fn informed_observer_deriv<T: Scalar>(
    xi: &[T],
    y_v: &[T],
    l: &Matrix<T>,
    s: &Matrix<T>,
    f: &Matrix<T>,
) -> Vec<T> {
    let mut innovation = f.mul_vec(xi);
    for (r, &y) in innovation.iter_mut().zip(y_v) {
        *r -= y;
    }
    let mut out = s.mul_vec(xi);
    l.mul_vec_add(&innovation, &mut out);
    out
}

/// Matrices of the state-exchanging adaptive observer.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveObserver<'a, T> {
    pub s: &'a Matrix<T>,
    pub p: &'a Matrix<T>,
    pub gamma: &'a Matrix<T>,
}

/// Disagreement `Σ_j a_ij (own - other_j)`.
pub fn disagreement<'n, T: Scalar>(
    own: &[T],
    neighbors: impl IntoIterator<Item = (T, &'n [T])>,
) -> Vec<T> {
    let mut z = vec![T::zero(); own.len()];
    for (a, other) in neighbors {
        for ((zk, &o), &x) in z.iter_mut().zip(other).zip(own) {
            *zk += a * (x - o);
        }
    }
    z
}

/// Uninformed follower exchanging estimates:
///
/// ```text
/// ζ = Σ a_ij (ξ_i - ξ_j),  ρ = (1 + ζᵀPζ)³
/// ξ̇ = Sξ - d ρ ζ,          ḋ = ζᵀΓζ
/// ```
pub fn adaptive_observer_deriv<'n, T: Scalar>(
    obs: AdaptiveObserver<'_, T>,
    xi: &[T],
    d: T,
    neighbors: impl IntoIterator<Item = (T, &'n [T])>,
) -> (Vec<T>, T) {
    let zeta = disagreement(xi, neighbors);
    let base = T::one() + obs.p.quad_form(&zeta);
    let rho = base * base * base;
    let mut dxi = obs.s.mul_vec(xi);
    axpy(-(d * rho), &zeta, &mut dxi);
    (dxi, obs.gamma.quad_form(&zeta))
}

/// Uninformed follower exchanging virtual outputs `μ = Fξ`:
///
/// ```text
/// w = Σ a_ij (μ_i - μ_j)
/// ξ̇ = Sξ + c J w,  ċ = τ wᵀw
/// ```
pub fn output_observer_deriv<'n, T: Scalar>(
    s: &Matrix<T>,
    j: &Matrix<T>,
    xi: &[T],
    mu: &[T],
    c: T,
    tau: T,
    neighbors: impl IntoIterator<Item = (T, &'n [T])>,
) -> (Vec<T>, T) {
    let w = disagreement(mu, neighbors);
    let mut dxi = s.mul_vec(xi);
    axpy(c, &j.mul_vec(&w), &mut dxi);
    (dxi, tau * dot(&w, &w))
}

/// `u = K1 x + K2 ξ`.
pub fn static_control<T: Scalar>(x: &[T], xi: &[T], k1: &Matrix<T>, k2: &Matrix<T>) -> Vec<T> {
    let mut u = k1.mul_vec(x);
    k2.mul_vec_add(xi, &mut u);
    u
}

/// Feedback and internal-model matrices of the dynamic state law.
#[derive(Debug, Clone, Copy)]
pub struct DynamicStateGains<'a, T> {
    pub kx: &'a Matrix<T>,
    pub kz: &'a Matrix<T>,
    pub g1: &'a Matrix<T>,
    pub g2: &'a Matrix<T>,
}

/// `u = Kx x + Kz z`, `ż = G1 z + G2 (C x + D ξ)`.
pub fn dynamic_state_control<T: Scalar>(
    x: &[T],
    z: &[T],
    xi: &[T],
    gains: DynamicStateGains<'_, T>,
    c: &Matrix<T>,
    d: &Matrix<T>,
) -> (Vec<T>, Vec<T>) {
    let mut u = gains.kx.mul_vec(x);
    gains.kz.mul_vec_add(z, &mut u);
    let mut meas = c.mul_vec(x);
    d.mul_vec_add(xi, &mut meas);
    let mut dz = gains.g1.mul_vec(z);
    gains.g2.mul_vec_add(&meas, &mut dz);
    (u, dz)
}

/// Compensator of the output feedback law.
#[derive(Debug, Clone, Copy)]
pub struct OutputFeedbackGains<'a, T> {
    /// `[Kx, Kz]`.
    pub k: &'a Matrix<T>,
    pub p1: &'a Matrix<T>,
    pub p2: &'a Matrix<T>,
}

/// `u = K z`, `ż = 𝒫1 z + 𝒫2 y` with `y = C x + D ξ`.
pub fn output_feedback_control<T: Scalar>(
    measurement: &[T],
    z: &[T],
    gains: OutputFeedbackGains<'_, T>,
) -> (Vec<T>, Vec<T>) {
    let u = gains.k.mul_vec(z);
    let mut dz = gains.p1.mul_vec(z);
    gains.p2.mul_vec_add(measurement, &mut dz);
    (u, dz)
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

    #[test]
    fn exosystem_examples() {
        assert_eq!(exosystem_deriv(&harmonic(), &[1.0, 0.0]), vec![0.0, -2.0]);
        assert_eq!(exosystem_deriv(&harmonic(), &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(exosystem_deriv(&Matrix::zeros(2, 2), &[3.0, -1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn informed_observer_matches_error_dynamics() {
        let s = harmonic();
        let f = m(&[&[0.0, -2.0]]);
        let l = m(&[&[0.0], &[1.5]]);
        let v = [1.0, 0.0];
        let xi = [1.0, 1.0];
        let y_v = f.mul_vec(&v);
        let direct = informed_observer_deriv(&xi, &y_v, &l, &s, &f);
        let slf = &s + &(&l * &f);
        let err: Vec<f64> = xi.iter().zip(&v).map(|(a, b)| a - b).collect();
        let mut via_error = slf.mul_vec(&err);
        for (o, sv) in via_error.iter_mut().zip(s.mul_vec(&v)) {
            *o += sv;
        }
        for (a, b) in direct.iter().zip(&via_error) {
            assert!((a - b).abs() < 1e-15);
        }
        // zero innovation leaves only the exosystem part
        assert_eq!(informed_observer_deriv(&v, &y_v, &l, &s, &f), s.mul_vec(&v));
    }

    #[test]
    fn adaptive_observer_scalar_toy() {
        let one = m(&[&[1.0]]);
        let zero = m(&[&[0.0]]);
        let obs = AdaptiveObserver {
            s: &zero,
            p: &one,
            gamma: &one,
        };
        let nb: [f64; 1] = [0.0];
        let (dxi, dd) = adaptive_observer_deriv(obs, &[1.0], 1.0, [(1.0, &nb[..])]);
        assert_eq!(dxi, vec![-8.0]);
        assert_eq!(dd, 1.0);
    }

    #[test]
    fn adaptive_observer_at_consensus() {
        let s = harmonic();
        let p = Matrix::identity(2);
        let obs = AdaptiveObserver {
            s: &s,
            p: &p,
            gamma: &p,
        };
        let xi = [0.3, -0.7];
        let (dxi, dd) = adaptive_observer_deriv(obs, &xi, 2.0, [(1.0, &xi[..]), (0.5, &xi[..])]);
        assert_eq!(dxi, s.mul_vec(&xi));
        assert_eq!(dd, 0.0);
    }

    #[test]
    fn output_observer_scalar_toy() {
        let s = m(&[&[0.0]]);
        let j = m(&[&[-1.0]]);
        let nb: [f64; 1] = [0.0];
        let (dxi, dc) = output_observer_deriv(&s, &j, &[1.0], &[1.0], 2.0, 1.0, [(1.0, &nb[..])]);
        assert_eq!(dxi, vec![-2.0]);
        assert_eq!(dc, 1.0);
    }

    #[test]
    fn static_law_reproduces_feedforward() {
        let k1 = m(&[&[-1.0, -1.5]]);
        let x_reg = m(&[&[0.0, -2.0], &[2.0, 0.0]]);
        let u_reg = m(&[&[0.0, 0.5]]);
        let k2 = &u_reg - &(&k1 * &x_reg);
        let v = [0.4, -1.1];
        let u = static_control(&x_reg.mul_vec(&v), &v, &k1, &k2);
        let want = u_reg.mul_vec(&v);
        assert!((u[0] - want[0]).abs() < 1e-15);
        assert_eq!(static_control(&[0.0, 0.0], &[1.0, 1.0], &k1, &Matrix::zeros(1, 2)), vec![0.0]);
    }

    #[test]
    fn dynamic_state_law() {
        let kx = m(&[&[-4.95, -2.85]]);
        let kz = m(&[&[8.1, 0.3]]);
        let g1 = harmonic();
        let g2 = m(&[&[0.0], &[1.0]]);
        let c = m(&[&[1.0, 0.0]]);
        let d = m(&[&[0.0, 2.0]]);
        let gains = DynamicStateGains {
            kx: &kx,
            kz: &kz,
            g1: &g1,
            g2: &g2,
        };
        let (x, z, xi) = ([0.2, -0.5], [1.0, 0.25], [0.7, 0.1]);
        let (u, dz) = dynamic_state_control(&x, &z, &xi, gains, &c, &d);
        let u_oracle = -4.95 * 0.2 + -2.85 * -0.5 + 8.1 * 1.0 + 0.3 * 0.25;
        let meas = 0.2 + 2.0 * 0.1;
        assert!((u[0] - u_oracle).abs() < 1e-14);
        assert!((dz[0] - 0.25).abs() < 1e-15);
        assert!((dz[1] - (-2.0 + meas)).abs() < 1e-15);

        let (u0, dz0) = dynamic_state_control(&x, &[0.0, 0.0], &[0.0, 0.0], gains, &Matrix::zeros(1, 2), &d);
        assert!((u0[0] - kx.mul_vec(&x)[0]).abs() < 1e-15);
        assert_eq!(dz0, vec![0.0, 0.0]);
    }

    #[test]
    fn output_feedback_at_rest() {
        let k = Matrix::from_fn(1, 4, |_, j| j as f64);
        let p1 = Matrix::identity(4);
        let p2 = Matrix::from_fn(4, 1, |i, _| i as f64);
        let gains = OutputFeedbackGains {
            k: &k,
            p1: &p1,
            p2: &p2,
        };
        let (u, dz) = output_feedback_control(&[0.0], &[0.0; 4], gains);
        assert_eq!(u, vec![0.0]);
        assert_eq!(dz, vec![0.0; 4]);
        let (_, dz) = output_feedback_control(&[2.0], &[0.0; 4], gains);
        assert_eq!(dz, vec![0.0, 2.0, 4.0, 6.0]);
    }
}
