//! Offline gain computation.
//!
//! Everything the closed loop needs before time zero: assumption checks,
//! regulator equations, internal models, feedback and observer gains. Each
//! stability requirement a design relies on is certified numerically and
//! recorded in the resulting [`GainSet`].

mod assumptions;
mod gains;
mod internal_model;
mod regulator;

pub use assumptions::{check_assumptions, is_detectable, is_observable, is_stabilizable, AssumptionReport};
pub use gains::{
    dynamic_state_design, exo_observer_gain, output_injection_gain, stabilizing_gain, synthesize, synthesize_theorem2,
    synthesize_theorem3, synthesize_theorem5, AgentController, AgentGains, AgentOverride,
    Certificate, ExoObserverGain, GainOverrides, GainSet, GainSign, SharedGains,
    SynthesisRequest,
};
pub use internal_model::{build_internal_model, InternalModel};
pub use regulator::{solve_regulator_equations, RegulatorSolution};

use serde::{Deserialize, Serialize};

use crate::graph::{DirectedGraph, GraphError};
use crate::linalg::LinalgError;
use crate::{Matrix, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error("regulator equations have no solution (transmission condition fails)")]
    NoSolution,
    #[error("regulator equations are underdetermined and rank deficient")]
    NonUnique,
    #[error("pair is not stabilizable")]
    NotStabilizable,
    #[error("exosystem pair (S, F) is not detectable")]
    NotDetectable,
    #[error("pair (A, C) is not observable")]
    NotObservable,
    #[error("certification failed: {0}")]
    CertificationFailed(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("assumption {0} does not hold")]
    AssumptionViolated(u8),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(LinalgError),
    #[error("agent {agent}: {source}")]
    Agent {
        agent: usize,
        #[source]
        source: Box<SynthesisError>,
    },
}

impl From<LinalgError> for SynthesisError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NotStabilizable => SynthesisError::NotStabilizable,
            other => SynthesisError::Linalg(other),
        }
    }
}

impl SynthesisError {
    pub(crate) fn for_agent(self, agent: usize) -> Self {
        SynthesisError::Agent {
            agent,
            source: Box::new(self),
        }
    }

    /// Strips agent context.
    pub fn root(&self) -> &SynthesisError {
        match self {
            SynthesisError::Agent { source, .. } => source.root(),
            other => other,
        }
    }
}

/// The five matrices of one linear subsystem
/// `ẋ = Ax + Bu + Ev`, `e = Cx + Dv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantMatrices<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub c: Matrix<T>,
    pub d: Matrix<T>,
    pub e: Matrix<T>,
}

impl<T: Scalar> PlantMatrices<T> {
    pub fn zeros_like(other: &PlantMatrices<T>) -> Self {
        let z = |m: &Matrix<T>| Matrix::zeros(m.nrows(), m.ncols());
        Self {
            a: z(&other.a),
            b: z(&other.b),
            c: z(&other.c),
            d: z(&other.d),
            e: z(&other.e),
        }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Exosystem order implied by `d` and `e`.
    pub fn q(&self) -> usize {
        self.e.ncols()
    }

    /// Checks the shapes `a: n×n, b: n×m, c: p×n, d: p×q, e: n×q`.
    pub fn validate(&self, q: usize) -> Result<(), SynthesisError> {
        let (n, m, p) = (self.n(), self.m(), self.p());
        let checks = [
            ("a", self.a.shape(), (n, n)),
            ("b", self.b.shape(), (n, m)),
            ("c", self.c.shape(), (p, n)),
            ("d", self.d.shape(), (p, q)),
            ("e", self.e.shape(), (n, q)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(SynthesisError::Dimension(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        if n == 0 || m == 0 || p == 0 {
            return Err(SynthesisError::Dimension(
                "state, input and output dimensions must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn offset(&self, delta: &PlantMatrices<T>) -> Self {
        Self {
            a: &self.a + &delta.a,
            b: &self.b + &delta.b,
            c: &self.c + &delta.c,
            d: &self.d + &delta.d,
            e: &self.e + &delta.e,
        }
    }
}

/// A subsystem as nominal matrices plus an additive uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSubsystem<T> {
    pub nominal: PlantMatrices<T>,
    pub delta: PlantMatrices<T>,
}

impl<T: Scalar> LtiSubsystem<T> {
    /// Nominal subsystem with zero uncertainty.
    pub fn new(nominal: PlantMatrices<T>) -> Self {
        let delta = PlantMatrices::zeros_like(&nominal);
        Self { nominal, delta }
    }

    pub fn with_delta(mut self, delta: PlantMatrices<T>) -> Self {
        self.delta = delta;
        self
    }

    /// Nominal plus uncertainty.
    pub fn actual(&self) -> PlantMatrices<T> {
        self.nominal.offset(&self.delta)
    }

    pub fn validate(&self, q: usize) -> Result<(), SynthesisError> {
        self.nominal.validate(q)?;
        let shapes = |p: &PlantMatrices<T>| {
            [p.a.shape(), p.b.shape(), p.c.shape(), p.d.shape(), p.e.shape()]
        };
        if shapes(&self.nominal) != shapes(&self.delta) {
            return Err(SynthesisError::Dimension(
                "uncertainty matrices must match nominal shapes".into(),
            ));
        }
        Ok(())
    }
}

/// Exosystem `v̇ = Sv`, `y_v = Fv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exosystem<T> {
    pub s: Matrix<T>,
    pub f: Matrix<T>,
    pub v0: Vec<T>,
}

impl<T: Scalar> Exosystem<T> {
    pub fn q(&self) -> usize {
        self.s.nrows()
    }

    pub fn l(&self) -> usize {
        self.f.nrows()
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        let q = self.q();
        if q == 0 || !self.s.is_square() || self.f.ncols() != q || self.v0.len() != q {
            return Err(SynthesisError::Dimension(format!(
                "exosystem: s {:?}, f {:?}, v0 length {}",
                self.s.shape(),
                self.f.shape(),
                self.v0.len()
            )));
        }
        Ok(())
    }
}

/// Graph, subsystems and exosystem of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel<T> {
    pub graph: DirectedGraph<T>,
    pub subsystems: Vec<LtiSubsystem<T>>,
    pub exosystem: Exosystem<T>,
}

impl<T: Scalar> NetworkModel<T> {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        self.exosystem.validate()?;
        if self.subsystems.len() != self.graph.n_followers() {
            return Err(SynthesisError::Dimension(format!(
                "{} subsystems for {} followers",
                self.subsystems.len(),
                self.graph.n_followers()
            )));
        }
        let q = self.exosystem.q();
        for (i, sub) in self.subsystems.iter().enumerate() {
            sub.validate(q).map_err(|e| e.for_agent(i + 1))?;
        }
        Ok(())
    }
}

/// Control law applied by every agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// `u = K1 x + K2 ξ`
    Static,
    /// `u = Kx x + Kz z` with a p-copy internal model.
    DynamicState,
    /// Observer-based compensator driven by `Cx + Dξ`.
    OutputFeedback,
}

/// Exosystem estimator run by uninformed agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    /// Neighbors exchange full estimates; adaptive gain `d_i`.
    State,
    /// Neighbors exchange `Fξ`; adaptive gain `c_i`.
    Output,
}
