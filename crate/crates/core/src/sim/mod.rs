//! Closed-loop assembly, integration, traces and metrics.

mod assemble;
mod ode;
mod trace;
mod uncertainty;

pub use assemble::{assemble, assemble_with_gains, integrate, run_scenario, ClosedLoopSystem, StateLayout};
pub use ode::{integrate_fixed, Rk4, VectorField};
pub use trace::{compute_metrics, AgentSeries, Metrics, Trace, TraceMeta};
pub use uncertainty::{sample_uncertainty, PlantMatrix, UncertaintyRange, UncertaintySpec};

use serde::{Deserialize, Serialize};

use crate::synthesis::{
    ControllerKind, GainOverrides, NetworkModel, ObserverKind, SynthesisError, SynthesisRequest,
};
use crate::linalg::NumericPolicy;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("incompatible controller/observer selection: {0}")]
    IncompatibleKinds(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("state norm exceeded the divergence bound at t = {time}")]
    Diverged { time: f64 },
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig<T> {
    pub dt: T,
    pub t_final: T,
    pub method: Method,
    /// Keep every `record_every`-th step in the trace.
    pub record_every: usize,
    /// Threshold used for the settling time.
    pub settle_epsilon: T,
    /// Abort once any state component exceeds this magnitude.
    pub divergence_bound: T,
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(1e-3),
            t_final: T::lit(100.0),
            method: Method::Rk4,
            record_every: 10,
            settle_epsilon: T::lit(1e-2),
            divergence_bound: T::lit(1e9),
        }
    }
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > T::zero()) || !(self.t_final >= self.dt) {
            return Err(SimError::InvalidConfig(format!(
                "need dt > 0 and t_final >= dt, got dt = {}, t_final = {}",
                self.dt, self.t_final
            )));
        }
        if self.record_every == 0 {
            return Err(SimError::InvalidConfig("record_every must be positive".into()));
        }
        Ok(())
    }

    /// Number of fixed steps covering `[0, t_final]`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().to_usize().unwrap_or(0).max(1)
    }
}

/// Per-agent initial values; `None` selects the default
/// (`ξ = 0`, `z = 0`, `d = 1`, `c = 0`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentInitial<T> {
    pub x0: Option<Vec<T>>,
    pub xi0: Option<Vec<T>>,
    pub z0: Option<Vec<T>>,
    pub d0: Option<T>,
    pub c0: Option<T>,
}

/// Everything needed to synthesize and simulate one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub network: NetworkModel<T>,
    pub controller: ControllerKind,
    pub observer: ObserverKind,
    pub overrides: GainOverrides<T>,
    /// Output-observer adaptation rates, one per follower.
    pub taus: Vec<T>,
    pub initial: Vec<AgentInitial<T>>,
    pub integrator: IntegratorConfig<T>,
    pub uncertainty: UncertaintySpec<T>,
}

impl<T: Scalar> Scenario<T> {
    pub fn synthesis_request(&self, policy: NumericPolicy<T>) -> SynthesisRequest<'_, T> {
        SynthesisRequest {
            network: &self.network,
            observer: self.observer,
            overrides: &self.overrides,
            taus: &self.taus,
            policy,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.network.validate()?;
        self.integrator.validate()?;
        let n = self.network.subsystems.len();
        if self.taus.len() != n || self.initial.len() != n {
            return Err(SimError::InvalidConfig(format!(
                "{} followers but {} adaptation rates and {} initial conditions",
                n,
                self.taus.len(),
                self.initial.len()
            )));
        }
        if self.observer == ObserverKind::Output && !self.network.graph.check_assumption6() {
            return Err(SimError::IncompatibleKinds(
                "the output observer needs an undirected uninformed subgraph".into(),
            ));
        }
        Ok(())
    }
}
