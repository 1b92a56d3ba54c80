use super::ode::{Rk4, VectorField};
use super::trace::{AgentSeries, Trace, TraceMeta};
use super::{sample_uncertainty, IntegratorConfig, Scenario, SimError};
use crate::agents::{
    adaptive_observer_deriv, dynamic_state_control, informed_observer_deriv,
    output_feedback_control, output_observer_deriv, static_control, AdaptiveObserver,
    DynamicStateGains, OutputFeedbackGains,
};
use crate::linalg::NumericPolicy;
use crate::synthesis::{synthesize, AgentController, GainSet, ObserverKind, PlantMatrices};
use crate::{Matrix, Scalar};

/// Offsets of every block in the stacked state
/// `[v; x_1..x_N; z_1..z_N; ξ_1..ξ_N; adaptive gains of uninformed followers]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    pub q: usize,
    /// `(offset, length)` of each `x_i`.
    pub x: Vec<(usize, usize)>,
    /// `(offset, length)` of each `z_i`.
    pub z: Vec<(usize, usize)>,
    /// Offset of each `ξ_i` (length `q`).
    pub xi: Vec<usize>,
    /// Offset of `d_i` or `c_i`, for uninformed followers only.
    pub gain: Vec<Option<usize>>,
    pub dim: usize,
}

impl StateLayout {
    fn new(q: usize, n: &[usize], nz: &[usize], informed: &[bool]) -> Self {
        let mut off = q;
        let mut blocks = |lens: &[usize]| {
            lens.iter()
                .map(|&len| {
                    let b = (off, len);
                    off += len;
                    b
                })
                .collect::<Vec<_>>()
        };
        let x = blocks(n);
        let z = blocks(nz);
        let xi = blocks(&vec![q; n.len()]).into_iter().map(|b| b.0).collect();
        let gain = informed
            .iter()
            .map(|&inf| {
                if inf {
                    None
                } else {
                    off += 1;
                    Some(off - 1)
                }
            })
            .collect();
        Self {
            q,
            x,
            z,
            xi,
            gain,
            dim: off,
        }
    }
}

#[derive(Debug, Clone)]
enum Law<T> {
    Static { k1: Matrix<T>, k2: Matrix<T> },
    Dynamic { kx: Matrix<T>, kz: Matrix<T>, g1: Matrix<T>, g2: Matrix<T> },
    Output { k: Matrix<T>, p1: Matrix<T>, p2: Matrix<T> },
}

#[derive(Debug, Clone)]
struct AgentRuntime<T> {
    plant: PlantMatrices<T>,
    informed: bool,
    /// `(j, a_ij)` with `j` 0-based.
    neighbors: Vec<(usize, T)>,
    law: Law<T>,
    tau: T,
}

/// The assembled network as one vector field.
#[derive(Debug, Clone)]
pub struct ClosedLoopSystem<T> {
    layout: StateLayout,
    observer: ObserverKind,
    s: Matrix<T>,
    f: Matrix<T>,
    l: Matrix<T>,
    j: Matrix<T>,
    p: Matrix<T>,
    gamma: Matrix<T>,
    agents: Vec<AgentRuntime<T>>,
    x0: Vec<T>,
    gains: GainSet<T>,
    deltas: Vec<PlantMatrices<T>>,
    config: IntegratorConfig<T>,
    seed: u64,
}

/// Validates the scenario, synthesizes gains from nominal data, samples
/// the uncertainty once and fixes the state layout.
pub fn assemble<T: Scalar>(
    scenario: &Scenario<T>,
    policy: &NumericPolicy<T>,
) -> Result<ClosedLoopSystem<T>, SimError> {
    scenario.validate()?;
    let gains = synthesize(&scenario.synthesis_request(*policy), scenario.controller)?;
    let nominal: Vec<_> = scenario
        .network
        .subsystems
        .iter()
        .map(|s| s.nominal.clone())
        .collect();
    let sampled = sample_uncertainty(&scenario.uncertainty, &nominal)?;
    let deltas = scenario
        .network
        .subsystems
        .iter()
        .zip(&sampled)
        .map(|(sub, d)| sub.delta.offset(d))
        .collect();
    assemble_with_gains(scenario, gains, deltas)
}

/// Assembles with externally supplied gains and plant perturbations; no
/// synthesis or certification is performed on `gains`.
pub fn assemble_with_gains<T: Scalar>(
    scenario: &Scenario<T>,
    gains: GainSet<T>,
    deltas: Vec<PlantMatrices<T>>,
) -> Result<ClosedLoopSystem<T>, SimError> {
    scenario.validate()?;
    let net = &scenario.network;
    let n_agents = net.subsystems.len();
    if gains.agents.len() != n_agents || deltas.len() != n_agents {
        return Err(SimError::InvalidConfig(format!(
            "{} followers, {} gain entries, {} perturbations",
            n_agents,
            gains.agents.len(),
            deltas.len()
        )));
    }
    if gains.controller != scenario.controller || gains.observer != scenario.observer {
        return Err(SimError::IncompatibleKinds(
            "gain set was synthesized for different controller or observer kinds".into(),
        ));
    }
    let exo = &net.exosystem;
    let q = exo.q();
    let mut agents = Vec::with_capacity(n_agents);
    for (k, ((sub, ag), delta)) in net.subsystems.iter().zip(&gains.agents).zip(&deltas).enumerate() {
        let plant = sub.nominal.offset(delta);
        plant
            .validate(q)
            .map_err(|e| SimError::Synthesis(e.for_agent(k + 1)))?;
        let law = match &ag.controller {
            AgentController::Static { k1, k2, .. } => Law::Static {
                k1: k1.clone(),
                k2: k2.clone(),
            },
            AgentController::DynamicState { kx, kz, model } => Law::Dynamic {
                kx: kx.clone(),
                kz: kz.clone(),
                g1: model.g1.clone(),
                g2: model.g2.clone(),
            },
            AgentController::OutputFeedback { kx, kz, p1, p2, .. } => Law::Output {
                k: Matrix::hstack(&[kx, kz]),
                p1: p1.clone(),
                p2: p2.clone(),
            },
        };
        agents.push(AgentRuntime {
            plant,
            informed: net.graph.is_informed(k + 1),
            neighbors: net.graph.in_neighbors(k + 1).map(|(j, a)| (j - 1, a)).collect(),
            law,
            tau: scenario.taus[k],
        });
    }

    let n: Vec<usize> = agents.iter().map(|a| a.plant.n()).collect();
    let nz: Vec<usize> = gains.agents.iter().map(|a| a.controller.state_len()).collect();
    let informed: Vec<bool> = agents.iter().map(|a| a.informed).collect();
    let layout = StateLayout::new(q, &n, &nz, &informed);

    let mut x0 = vec![T::zero(); layout.dim];
    x0[..q].copy_from_slice(&exo.v0);
    for (k, init) in scenario.initial.iter().enumerate() {
        let mut put = |name: &str, off: usize, len: usize, val: &Option<Vec<T>>| {
            match val {
                Some(v) if v.len() != len => Err(SimError::InvalidConfig(format!(
                    "agent {}: {name} has length {}, expected {len}",
                    k + 1,
                    v.len()
                ))),
                Some(v) => {
                    x0[off..off + len].copy_from_slice(v);
                    Ok(())
                }
                None => Ok(()),
            }
        };
        put("x0", layout.x[k].0, layout.x[k].1, &init.x0)?;
        put("z0", layout.z[k].0, layout.z[k].1, &init.z0)?;
        put("xi0", layout.xi[k], q, &init.xi0)?;
        if let Some(off) = layout.gain[k] {
            let g = match scenario.observer {
                ObserverKind::State => {
                    let d = init.d0.unwrap_or_else(T::one);
                    if !(d >= T::one()) {
                        return Err(SimError::InvalidConfig(format!(
                            "agent {}: d0 must be at least 1",
                            k + 1
                        )));
                    }
                    d
                }
                ObserverKind::Output => {
                    let c = init.c0.unwrap_or_else(T::zero);
                    if !(c >= T::zero()) {
                        return Err(SimError::InvalidConfig(format!(
                            "agent {}: c0 must be nonnegative",
                            k + 1
                        )));
                    }
                    c
                }
            };
            x0[off] = g;
        }
    }

    Ok(ClosedLoopSystem {
        layout,
        observer: scenario.observer,
        s: exo.s.clone(),
        f: exo.f.clone(),
        l: gains.shared.l.clone(),
        j: gains.shared.j.clone(),
        p: gains.shared.p.clone(),
        gamma: gains.shared.gamma.clone(),
        agents,
        x0,
        gains,
        deltas,
        config: scenario.integrator.clone(),
        seed: scenario.uncertainty.seed,
    })
}

impl<T: Scalar> ClosedLoopSystem<T> {
    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn initial_state(&self) -> &[T] {
        &self.x0
    }

    pub fn gains(&self) -> &GainSet<T> {
        &self.gains
    }

    /// Perturbations applied on top of the nominal plants.
    pub fn deltas(&self) -> &[PlantMatrices<T>] {
        &self.deltas
    }

    pub fn config(&self) -> &IntegratorConfig<T> {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut IntegratorConfig<T> {
        &mut self.config
    }

    fn xi<'a>(&self, x: &'a [T], i: usize) -> &'a [T] {
        let off = self.layout.xi[i];
        &x[off..off + self.layout.q]
    }

    /// Control input and controller derivative of follower `i`.
    fn control(&self, i: usize, x: &[T]) -> (Vec<T>, Vec<T>) {
        let a = &self.agents[i];
        let (xo, n) = self.layout.x[i];
        let (zo, nz) = self.layout.z[i];
        let xs = &x[xo..xo + n];
        let zs = &x[zo..zo + nz];
        let xi = self.xi(x, i);
        match &a.law {
            Law::Static { k1, k2 } => (static_control(xs, xi, k1, k2), Vec::new()),
            Law::Dynamic { kx, kz, g1, g2 } => dynamic_state_control(
                xs,
                zs,
                xi,
                DynamicStateGains { kx, kz, g1, g2 },
                &a.plant.c,
                &a.plant.d,
            ),
            Law::Output { k, p1, p2 } => {
                let mut meas = a.plant.c.mul_vec(xs);
                a.plant.d.mul_vec_add(xi, &mut meas);
                output_feedback_control(&meas, zs, OutputFeedbackGains { k, p1, p2 })
            }
        }
    }

    fn sample(&self, t: T, x: &[T], trace: &mut Trace<T>) {
        let q = self.layout.q;
        let v = &x[..q];
        trace.times.push(t);
        trace.v.push(v.to_vec());
        for (i, a) in self.agents.iter().enumerate() {
            let (xo, n) = self.layout.x[i];
            let (zo, nz) = self.layout.z[i];
            let xs = &x[xo..xo + n];
            let mut e = a.plant.c.mul_vec(xs);
            a.plant.d.mul_vec_add(v, &mut e);
            let (u, _) = self.control(i, x);
            let s = &mut trace.agents[i];
            s.x.push(xs.to_vec());
            s.e.push(e);
            s.xi.push(self.xi(x, i).to_vec());
            s.z.push(x[zo..zo + nz].to_vec());
            s.u.push(u);
            if let Some(g) = self.layout.gain[i] {
                s.gain.push(x[g]);
            }
        }
    }
}

impl<T: Scalar> VectorField<T> for ClosedLoopSystem<T> {
    fn dim(&self) -> usize {
        self.layout.dim
    }

    fn eval(&self, _t: T, x: &[T], dx: &mut [T]) {
        let q = self.layout.q;
        let v = &x[..q];
        self.s.mul_vec_into(v, &mut dx[..q]);
        let y_v = self.f.mul_vec(v);
        let mu: Vec<Vec<T>> = match self.observer {
            ObserverKind::Output => (0..self.agents.len())
                .map(|i| self.f.mul_vec(self.xi(x, i)))
                .collect(),
            ObserverKind::State => Vec::new(),
        };

        for (i, a) in self.agents.iter().enumerate() {
            let xi = self.xi(x, i);
            let xi_off = self.layout.xi[i];
            let dxi = if a.informed {
                informed_observer_deriv(xi, &y_v, &self.l, &self.s, &self.f)
            } else {
                let g = self.layout.gain[i].expect("uninformed followers carry a gain");
                let (dxi, dg) = match self.observer {
                    ObserverKind::State => adaptive_observer_deriv(
                        AdaptiveObserver {
                            s: &self.s,
                            p: &self.p,
                            gamma: &self.gamma,
                        },
                        xi,
                        x[g],
                        a.neighbors.iter().map(|&(j, w)| (w, self.xi(x, j))),
                    ),
                    ObserverKind::Output => output_observer_deriv(
                        &self.s,
                        &self.j,
                        xi,
                        &mu[i],
                        x[g],
                        a.tau,
                        a.neighbors.iter().map(|&(j, w)| (w, mu[j].as_slice())),
                    ),
                };
                dx[g] = dg;
                dxi
            };
            dx[xi_off..xi_off + q].copy_from_slice(&dxi);

            let (u, dz) = self.control(i, x);
            let (zo, nz) = self.layout.z[i];
            dx[zo..zo + nz].copy_from_slice(&dz);

            let (xo, n) = self.layout.x[i];
            let out = &mut dx[xo..xo + n];
            a.plant.a.mul_vec_into(&x[xo..xo + n], out);
            a.plant.b.mul_vec_add(&u, out);
            a.plant.e.mul_vec_add(v, out);
        }
    }
}

/// Runs the fixed-step integration described by the system's
/// [`IntegratorConfig`], recording every `record_every`-th step and the
/// final one.
pub fn integrate<T: Scalar>(system: &ClosedLoopSystem<T>) -> Result<Trace<T>, SimError> {
    let cfg = &system.config;
    cfg.validate()?;
    let steps = cfg.steps();
    let mut trace = Trace {
        agents: vec![AgentSeries::default(); system.agents.len()],
        adaptive: system.agents.iter().map(|a| !a.informed).collect(),
        meta: TraceMeta {
            seed: system.seed,
            certificates_passed: system.gains.certificates.iter().filter(|c| c.certified).count(),
            certificates_total: system.gains.certificates.len(),
            gain_name: match system.observer {
                ObserverKind::State => "d",
                ObserverKind::Output => "c",
            }
            .into(),
            ..Default::default()
        },
        ..Default::default()
    };
    let mut x = system.x0.clone();
    let mut rk = Rk4::new(system.dim());
    system.sample(T::zero(), &x, &mut trace);
    for k in 0..steps {
        let t = cfg.dt * T::from_usize_lossy(k);
        rk.step(system, t, cfg.dt, &mut x);
        let t_next = cfg.dt * T::from_usize_lossy(k + 1);
        let time = t_next.to_f64().unwrap_or(f64::NAN);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { time });
        }
        if x.iter().any(|v| v.abs() > cfg.divergence_bound) {
            return Err(SimError::Diverged { time });
        }
        if (k + 1) % cfg.record_every == 0 || k + 1 == steps {
            system.sample(t_next, &x, &mut trace);
        }
    }
    Ok(trace)
}

/// [`assemble`](super::assemble) followed by [`integrate`], tagging the
/// trace with `scenario_hash`.
pub fn run_scenario<T: Scalar>(
    scenario: &Scenario<T>,
    policy: &NumericPolicy<T>,
    scenario_hash: &str,
) -> Result<Trace<T>, SimError> {
    let system = assemble(scenario, policy)?;
    let mut trace = integrate(&system)?;
    trace.meta.scenario_hash = scenario_hash.to_string();
    Ok(trace)
}
