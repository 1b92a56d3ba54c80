//! Fixed-step classical Runge-Kutta integration.

use crate::Scalar;

/// Autonomous or time-varying right-hand side `ẋ = f(t, x)`.
pub trait VectorField<T> {
    fn dim(&self) -> usize;
    fn eval(&self, t: T, x: &[T], dx: &mut [T]);
}

/// Reusable RK4 stepper holding its stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Scalar> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![T::zero(); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `x` from `t` to `t + h` in place.
    pub fn step<F: VectorField<T> + ?Sized>(&mut self, f: &F, t: T, h: T, x: &mut [T]) {
        let half = h * T::lit(0.5);
        f.eval(t, x, &mut self.k1);
        for ((o, &xi), &k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k1) {
            *o = xi + half * k;
        }
        f.eval(t + half, &self.tmp, &mut self.k2);
        for ((o, &xi), &k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k2) {
            *o = xi + half * k;
        }
        f.eval(t + half, &self.tmp, &mut self.k3);
        for ((o, &xi), &k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k3) {
            *o = xi + h * k;
        }
        f.eval(t + h, &self.tmp, &mut self.k4);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += sixth * (self.k1[i] + two * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// Integrates `steps` fixed steps of size `h` from `t0`.
pub fn integrate_fixed<T: Scalar, F: VectorField<T> + ?Sized>(
    f: &F,
    t0: T,
    h: T,
    steps: usize,
    x: &mut [T],
) {
    let mut rk = Rk4::new(f.dim());
    for k in 0..steps {
        rk.step(f, t0 + h * T::from_usize_lossy(k), h, x);
    }
}
