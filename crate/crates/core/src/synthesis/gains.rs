use serde::Serialize;

use super::{
    build_internal_model, check_assumptions, is_detectable, is_observable,
    solve_regulator_equations, AssumptionReport, ControllerKind, InternalModel, NetworkModel,
    ObserverKind, PlantMatrices, RegulatorSolution, SynthesisError,
};
use crate::linalg::{is_hurwitz_with, is_positive_definite, CareProblem, NumericPolicy};
use crate::matrix::serialize_shaped;
use crate::{Matrix, Scalar};

/// `K` with `a + bK` Hurwitz, from the unit-weight CARE.
pub fn stabilizing_gain<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    policy: &NumericPolicy<T>,
) -> Result<Matrix<T>, SynthesisError> {
    let sol = CareProblem::unit_weights(a.clone(), b.clone()).solve_with(policy)?;
    let closed = a + &(b * &sol.gain);
    if !is_hurwitz_with(&closed, policy) {
        return Err(SynthesisError::CertificationFailed("A + BK".into()));
    }
    Ok(sol.gain)
}

/// `L` with `a - L c` Hurwitz: the transposed stabilizing gain of the dual pair.
pub fn output_injection_gain<T: Scalar>(
    a: &Matrix<T>,
    c: &Matrix<T>,
    policy: &NumericPolicy<T>,
) -> Result<Matrix<T>, SynthesisError> {
    if !is_detectable(a, c, policy) {
        return Err(SynthesisError::NotObservable);
    }
    let k = stabilizing_gain(&a.transpose(), &c.transpose(), policy)?;
    let l = -&k.transpose();
    if !is_hurwitz_with(&(a - &(&l * c)), policy) {
        return Err(SynthesisError::CertificationFailed("A - LC".into()));
    }
    Ok(l)
}

/// Which multiple of `P̃Fᵀ` made `S + LF` Hurwitz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GainSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct ExoObserverGain<T> {
    #[serde(serialize_with = "serialize_shaped")]
    pub l: Matrix<T>,
    /// Coupling matrix of the output-based observer; equal to `l`.
    #[serde(serialize_with = "serialize_shaped")]
    pub j: Matrix<T>,
    /// Solution of `P̃Sᵀ + SP̃ + I - P̃FᵀFP̃ = 0`.
    #[serde(serialize_with = "serialize_shaped")]
    pub p_tilde: Matrix<T>,
    pub sign: GainSign,
}

/// Observer gain `±P̃Fᵀ` for the exosystem. The positive sign is tried
/// first; for the usual sign conventions only `-P̃Fᵀ` makes `S + LF`
/// Hurwitz, and whichever passes the certificate is returned.
pub fn exo_observer_gain<T: Scalar>(
    s: &Matrix<T>,
    f: &Matrix<T>,
    policy: &NumericPolicy<T>,
) -> Result<ExoObserverGain<T>, SynthesisError> {
    if !is_detectable(s, f, policy) {
        return Err(SynthesisError::NotDetectable);
    }
    let sol = CareProblem::unit_weights(s.transpose(), f.transpose())
        .solve_with(policy)
        .map_err(|e| match e {
            crate::linalg::LinalgError::NotStabilizable => SynthesisError::NotDetectable,
            other => other.into(),
        })?;
    let pft = &sol.p * &f.transpose();
    for (sign, l) in [(GainSign::Positive, pft.clone()), (GainSign::Negative, -&pft)] {
        if is_hurwitz_with(&(s + &(&l * f)), policy) {
            return Ok(ExoObserverGain {
                j: l.clone(),
                l,
                p_tilde: sol.p,
                sign,
            });
        }
    }
    Err(SynthesisError::CertificationFailed(
        "S + LF for either sign of P̃Fᵀ".into(),
    ))
}

/// Manually chosen gains for one agent. Absent entries are synthesized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentOverride<T> {
    pub k1: Option<Matrix<T>>,
    pub kx: Option<Matrix<T>>,
    pub kz: Option<Matrix<T>>,
    pub li: Option<Matrix<T>>,
}

impl<T: Clone> AgentOverride<T> {
    fn or(&self, fallback: &AgentOverride<T>) -> AgentOverride<T> {
        AgentOverride {
            k1: self.k1.clone().or_else(|| fallback.k1.clone()),
            kx: self.kx.clone().or_else(|| fallback.kx.clone()),
            kz: self.kz.clone().or_else(|| fallback.kz.clone()),
            li: self.li.clone().or_else(|| fallback.li.clone()),
        }
    }
}

/// Gain overrides: an exosystem observer gain, defaults applied to every
/// agent, and per-agent entries (1-based) that take precedence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GainOverrides<T> {
    pub l: Option<Matrix<T>>,
    pub all_agents: AgentOverride<T>,
    pub agents: Vec<(usize, AgentOverride<T>)>,
}

impl<T: Clone> GainOverrides<T> {
    /// Effective override for follower `i` (1-based).
    pub fn for_agent(&self, i: usize) -> AgentOverride<T> {
        match self.agents.iter().find(|(idx, _)| *idx == i) {
            Some((_, o)) => o.or(&self.all_agents),
            None => self.all_agents.clone(),
        }
    }
}

/// Inputs to every synthesis routine.
#[derive(Debug, Clone)]
pub struct SynthesisRequest<'a, T> {
    pub network: &'a NetworkModel<T>,
    pub observer: ObserverKind,
    pub overrides: &'a GainOverrides<T>,
    /// Adaptation rates of the output-based observer, one per follower.
    pub taus: &'a [T],
    pub policy: NumericPolicy<T>,
}

/// Gains shared by all agents.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct SharedGains<T> {
    /// Informed observer gain, `S + LF` Hurwitz.
    #[serde(serialize_with = "serialize_shaped")]
    pub l: Matrix<T>,
    pub l_overridden: bool,
    /// Stabilizing solution of `SᵀP + PS + I - P² = 0`.
    #[serde(serialize_with = "serialize_shaped")]
    pub p: Matrix<T>,
    /// `Γ = P²`.
    #[serde(serialize_with = "serialize_shaped")]
    pub gamma: Matrix<T>,
    #[serde(serialize_with = "serialize_shaped")]
    pub j: Matrix<T>,
    #[serde(serialize_with = "serialize_shaped")]
    pub p_tilde: Matrix<T>,
    pub j_sign: GainSign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar + Serialize")]
pub enum AgentController<T> {
    Static {
        #[serde(serialize_with = "serialize_shaped")]
        k1: Matrix<T>,
        #[serde(serialize_with = "serialize_shaped")]
        k2: Matrix<T>,
        regulator: RegulatorSolution<T>,
    },
    DynamicState {
        #[serde(serialize_with = "serialize_shaped")]
        kx: Matrix<T>,
        #[serde(serialize_with = "serialize_shaped")]
        kz: Matrix<T>,
        model: InternalModel<T>,
    },
    OutputFeedback {
        #[serde(serialize_with = "serialize_shaped")]
        kx: Matrix<T>,
        #[serde(serialize_with = "serialize_shaped")]
        kz: Matrix<T>,
        #[serde(serialize_with = "serialize_shaped")]
        li: Matrix<T>,
        model: InternalModel<T>,
        /// Compensator dynamics `[[Ā + B̄Kx - LC̄, B̄Kz], [0, G1]]`.
        #[serde(serialize_with = "serialize_shaped")]
        p1: Matrix<T>,
        /// Compensator input map `[L; G2]`.
        #[serde(serialize_with = "serialize_shaped")]
        p2: Matrix<T>,
    },
}

impl<T: Scalar> AgentController<T> {
    /// Length of the controller state `z_i`.
    pub fn state_len(&self) -> usize {
        match self {
            AgentController::Static { .. } => 0,
            AgentController::DynamicState { model, .. } => model.order(),
            AgentController::OutputFeedback { p1, .. } => p1.nrows(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct AgentGains<T> {
    /// 1-based follower index.
    pub index: usize,
    pub controller: AgentController<T>,
    pub tau: T,
    pub overridden: bool,
}

/// One machine-checked stability or positivity condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub label: String,
    pub agent: Option<usize>,
    pub overridden: bool,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct GainSet<T> {
    pub controller: ControllerKind,
    pub observer: ObserverKind,
    pub assumptions: AssumptionReport,
    pub shared: SharedGains<T>,
    pub agents: Vec<AgentGains<T>>,
    pub certificates: Vec<Certificate>,
}

impl<T: Scalar> GainSet<T> {
    pub fn all_certified(&self) -> bool {
        self.certificates.iter().all(|c| c.certified)
    }
}

struct Certifier<'p, T> {
    policy: &'p NumericPolicy<T>,
    log: Vec<Certificate>,
}

impl<'p, T: Scalar> Certifier<'p, T> {
    fn hurwitz(
        &mut self,
        label: &str,
        agent: Option<usize>,
        overridden: bool,
        m: &Matrix<T>,
    ) -> Result<(), SynthesisError> {
        let ok = is_hurwitz_with(m, self.policy);
        self.record(label, agent, overridden, ok)
    }

    fn record(
        &mut self,
        label: &str,
        agent: Option<usize>,
        overridden: bool,
        ok: bool,
    ) -> Result<(), SynthesisError> {
        self.log.push(Certificate {
            label: label.to_string(),
            agent,
            overridden,
            certified: ok,
        });
        if ok {
            Ok(())
        } else {
            let err = SynthesisError::CertificationFailed(label.to_string());
            Err(match agent {
                Some(i) => err.for_agent(i),
                None => err,
            })
        }
    }
}

fn check_shape<T: Scalar>(
    name: &str,
    m: &Matrix<T>,
    want: (usize, usize),
) -> Result<(), SynthesisError> {
    if m.shape() == want {
        Ok(())
    } else {
        Err(SynthesisError::Dimension(format!(
            "override {name} is {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            want.0,
            want.1
        )))
    }
}

/// Checks shared preconditions and builds the gains every controller needs.
fn shared_stage<T: Scalar>(
    req: &SynthesisRequest<'_, T>,
    cert: &mut Certifier<'_, T>,
) -> Result<(AssumptionReport, SharedGains<T>), SynthesisError> {
    let net = req.network;
    net.validate()?;
    let policy = &req.policy;
    if req.taus.len() != net.subsystems.len() {
        return Err(SynthesisError::Dimension(format!(
            "{} adaptation rates for {} followers",
            req.taus.len(),
            net.subsystems.len()
        )));
    }
    if let Some(i) = req.taus.iter().position(|t| !(*t > T::zero())) {
        return Err(SynthesisError::Dimension(format!(
            "adaptation rate of agent {} must be positive",
            i + 1
        )));
    }
    if !net.graph.check_assumption1() {
        return Err(SynthesisError::AssumptionViolated(1));
    }
    if req.observer == ObserverKind::Output && !net.graph.check_assumption6() {
        return Err(SynthesisError::AssumptionViolated(6));
    }
    net.graph
        .laplacian_partition()
        .diagonal_scaling(policy)?;
    cert.record("diagonal scaling of L1", None, false, true)?;

    let report = check_assumptions(&net.subsystems, &net.exosystem, policy);
    if let Some(i) = report.stabilizable.iter().position(|ok| !ok) {
        return Err(SynthesisError::NotStabilizable.for_agent(i + 1));
    }
    if !report.a4() {
        return Err(SynthesisError::NotDetectable);
    }
    if let Some(i) = report.transmission.iter().position(|ok| !ok) {
        return Err(SynthesisError::NoSolution.for_agent(i + 1));
    }

    let exo = &net.exosystem;
    let q = exo.q();
    let care = CareProblem::unit_weights(exo.s.clone(), Matrix::identity(q)).solve_with(policy)?;
    let p = care.p;
    cert.record("P positive definite", None, false, is_positive_definite(&p, policy.pd_tol))?;
    let gamma = &p * &p;

    let dual = exo_observer_gain(&exo.s, &exo.f, policy)?;
    let (l, l_overridden) = match &req.overrides.l {
        Some(l) => {
            check_shape("l", l, (q, exo.l()))?;
            (l.clone(), true)
        }
        None => (dual.l.clone(), false),
    };
    cert.hurwitz("S + LF", None, l_overridden, &(&exo.s + &(&l * &exo.f)))?;
    if req.observer == ObserverKind::Output {
        cert.hurwitz("S + JF", None, false, &(&exo.s + &(&dual.j * &exo.f)))?;
    }
    Ok((
        report,
        SharedGains {
            l,
            l_overridden,
            p,
            gamma,
            j: dual.j,
            p_tilde: dual.p_tilde,
            j_sign: dual.sign,
        },
    ))
}

fn static_agent<T: Scalar>(
    i: usize,
    plant: &PlantMatrices<T>,
    s: &Matrix<T>,
    ov: &AgentOverride<T>,
    cert: &mut Certifier<'_, T>,
) -> Result<AgentController<T>, SynthesisError> {
    let policy = cert.policy;
    let (k1, overridden) = match &ov.k1 {
        Some(k) => {
            check_shape("k1", k, (plant.m(), plant.n()))?;
            (k.clone(), true)
        }
        None => (stabilizing_gain(&plant.a, &plant.b, policy)?, false),
    };
    cert.hurwitz("A + B K1", Some(i), overridden, &(&plant.a + &(&plant.b * &k1)))?;
    let regulator = solve_regulator_equations(plant, s, policy)?;
    let k2 = &regulator.u - &(&k1 * &regulator.x);
    Ok(AgentController::Static { k1, k2, regulator })
}

/// `[Ā, 0; G2 C̄, G1]` and `[B̄; 0]`.
fn augmented_pair<T: Scalar>(
    plant: &PlantMatrices<T>,
    model: &InternalModel<T>,
) -> (Matrix<T>, Matrix<T>) {
    let (n, m) = (plant.n(), plant.m());
    let nz = model.order();
    let a = Matrix::from_blocks(&[
        &[&plant.a, &Matrix::zeros(n, nz)],
        &[&(&model.g2 * &plant.c), &model.g1],
    ]);
    let b = Matrix::vstack(&[&plant.b, &Matrix::zeros(nz, m)]);
    (a, b)
}

/// Feedback `(Kx, Kz)` for the plant augmented with `model`, either taken
/// from the overrides or synthesized, and certified on
/// `[Ā + B̄Kx, B̄Kz; G2 C̄, G1]`.
pub fn dynamic_state_design<T: Scalar>(
    plant: &PlantMatrices<T>,
    model: &InternalModel<T>,
    kx: Option<&Matrix<T>>,
    kz: Option<&Matrix<T>>,
    policy: &NumericPolicy<T>,
) -> Result<(Matrix<T>, Matrix<T>, bool), SynthesisError> {
    let (n, m) = (plant.n(), plant.m());
    let nz = model.order();
    let (kx, kz, overridden) = match (kx, kz) {
        (Some(kx), Some(kz)) => {
            check_shape("kx", kx, (m, n))?;
            check_shape("kz", kz, (m, nz))?;
            (kx.clone(), kz.clone(), true)
        }
        (None, None) => {
            let (aa, bb) = augmented_pair(plant, model);
            let k = stabilizing_gain(&aa, &bb, policy)?;
            (k.submatrix(0, 0, m, n), k.submatrix(0, n, m, nz), false)
        }
        _ => {
            return Err(SynthesisError::Dimension(
                "kx and kz must be overridden together".into(),
            ))
        }
    };
    let closed = Matrix::from_blocks(&[
        &[&(&plant.a + &(&plant.b * &kx)), &(&plant.b * &kz)],
        &[&(&model.g2 * &plant.c), &model.g1],
    ]);
    if !is_hurwitz_with(&closed, policy) {
        return Err(SynthesisError::CertificationFailed(
            "[A + B Kx, B Kz; G2 C, G1]".into(),
        ));
    }
    Ok((kx, kz, overridden))
}

/// `(Kx, Kz, internal model, overridden)`.
type DynamicDesign<T> = (Matrix<T>, Matrix<T>, InternalModel<T>, bool);

fn dynamic_agent<T: Scalar>(
    i: usize,
    plant: &PlantMatrices<T>,
    s: &Matrix<T>,
    ov: &AgentOverride<T>,
    cert: &mut Certifier<'_, T>,
) -> Result<DynamicDesign<T>, SynthesisError> {
    let model = build_internal_model(s, plant.p());
    let (kx, kz, overridden) =
        dynamic_state_design(plant, &model, ov.kx.as_ref(), ov.kz.as_ref(), cert.policy)?;
    cert.record("[A + B Kx, B Kz; G2 C, G1]", Some(i), overridden, true)?;
    Ok((kx, kz, model, overridden))
}

fn output_feedback_agent<T: Scalar>(
    i: usize,
    plant: &PlantMatrices<T>,
    s: &Matrix<T>,
    ov: &AgentOverride<T>,
    cert: &mut Certifier<'_, T>,
) -> Result<(AgentController<T>, bool), SynthesisError> {
    let policy = cert.policy;
    if !is_observable(&plant.a, &plant.c, policy) {
        return Err(SynthesisError::NotObservable);
    }
    let (kx, kz, model, k_overridden) = dynamic_agent(i, plant, s, ov, cert)?;
    let (li, li_overridden) = match &ov.li {
        Some(l) => {
            check_shape("li", l, (plant.n(), plant.p()))?;
            (l.clone(), true)
        }
        None => (output_injection_gain(&plant.a, &plant.c, policy)?, false),
    };
    let lc = &li * &plant.c;
    cert.hurwitz("A - Li C", Some(i), li_overridden, &(&plant.a - &lc))?;

    let (n, nz) = (plant.n(), model.order());
    let bkx = &plant.b * &kx;
    let bkz = &plant.b * &kz;
    let top = &(&plant.a + &bkx) - &lc;
    let p1 = Matrix::from_blocks(&[&[&top, &bkz], &[&Matrix::zeros(nz, n), &model.g1]]);
    let p2 = Matrix::vstack(&[&li, &model.g2]);
    let closed = Matrix::from_blocks(&[
        &[&plant.a, &bkx, &bkz],
        &[&lc, &top, &bkz],
        &[&(&model.g2 * &plant.c), &Matrix::zeros(nz, n), &model.g1],
    ]);
    cert.hurwitz(
        "plant with output-feedback compensator",
        Some(i),
        k_overridden || li_overridden,
        &closed,
    )?;
    Ok((
        AgentController::OutputFeedback {
            kx,
            kz,
            li,
            model,
            p1,
            p2,
        },
        k_overridden || li_overridden,
    ))
}

fn run<T: Scalar>(
    req: &SynthesisRequest<'_, T>,
    kind: ControllerKind,
) -> Result<GainSet<T>, SynthesisError> {
    let mut cert = Certifier {
        policy: &req.policy,
        log: Vec::new(),
    };
    let (assumptions, shared) = shared_stage(req, &mut cert)?;
    let s = &req.network.exosystem.s;
    let mut agents = Vec::with_capacity(req.network.subsystems.len());
    for (k, sub) in req.network.subsystems.iter().enumerate() {
        let i = k + 1;
        let plant = &sub.nominal;
        let ov = req.overrides.for_agent(i);
        let (controller, overridden) = match kind {
            ControllerKind::Static => {
                static_agent(i, plant, s, &ov, &mut cert).map(|c| (c, ov.k1.is_some()))
            }
            ControllerKind::DynamicState => dynamic_agent(i, plant, s, &ov, &mut cert)
                .map(|(kx, kz, model, o)| (AgentController::DynamicState { kx, kz, model }, o)),
            ControllerKind::OutputFeedback => output_feedback_agent(i, plant, s, &ov, &mut cert),
        }
        .map_err(|e| match e {
            e @ SynthesisError::Agent { .. } => e,
            e => e.for_agent(i),
        })?;
        agents.push(AgentGains {
            index: i,
            controller,
            tau: req.taus[k],
            overridden,
        });
    }
    Ok(GainSet {
        controller: kind,
        observer: req.observer,
        assumptions,
        shared,
        agents,
        certificates: cert.log,
    })
}

/// Static state feedback `u = K1 x + K2 ξ` with `K2 = U - K1 X`.
pub fn synthesize_theorem2<T: Scalar>(req: &SynthesisRequest<'_, T>) -> Result<GainSet<T>, SynthesisError> {
    run(req, ControllerKind::Static)
}

/// Dynamic state feedback through a p-copy internal model.
pub fn synthesize_theorem3<T: Scalar>(req: &SynthesisRequest<'_, T>) -> Result<GainSet<T>, SynthesisError> {
    run(req, ControllerKind::DynamicState)
}

/// Observer-based dynamic output feedback with internal model.
pub fn synthesize_theorem5<T: Scalar>(req: &SynthesisRequest<'_, T>) -> Result<GainSet<T>, SynthesisError> {
    run(req, ControllerKind::OutputFeedback)
}

pub fn synthesize<T: Scalar>(
    req: &SynthesisRequest<'_, T>,
    kind: ControllerKind,
) -> Result<GainSet<T>, SynthesisError> {
    run(req, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DirectedGraph, Edge};
    use crate::synthesis::{Exosystem, LtiSubsystem};

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

    fn network(observer_friendly: bool) -> NetworkModel<f64> {
        let edges: Vec<_> = if observer_friendly {
            [(1, 2), (1, 3), (2, 3), (3, 2)]
                .iter()
                .map(|&(f, t)| Edge::new(f, t, 1.0))
                .collect()
        } else {
            [(1, 2), (2, 3)].iter().map(|&(f, t)| Edge::new(f, t, 1.0)).collect()
        };
        NetworkModel {
            graph: DirectedGraph::new(3, 1, &edges).unwrap(),
            subsystems: [1.0, 2.0, 3.0]
                .iter()
                .map(|&s| LtiSubsystem::new(example_plant(s)))
                .collect(),
            exosystem: Exosystem {
                s: harmonic(),
                f: m(&[&[0.0, -2.0]]),
                v0: vec![1.0, 0.0],
            },
        }
    }

    fn request<'a>(
        net: &'a NetworkModel<f64>,
        ov: &'a GainOverrides<f64>,
        taus: &'a [f64],
        observer: ObserverKind,
    ) -> SynthesisRequest<'a, f64> {
        SynthesisRequest {
            network: net,
            observer,
            overrides: ov,
            taus,
            policy: NumericPolicy::default(),
        }
    }

    #[test]
    fn scalar_stabilizing_gain() {
        let k = stabilizing_gain(&m(&[&[1.0]]), &m(&[&[1.0]]), &NumericPolicy::default()).unwrap();
        assert!((k[(0, 0)] + 1.0 + 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn hurwitz_plant_without_input() {
        let k = stabilizing_gain(&m(&[&[-1.0]]), &m(&[&[0.0]]), &NumericPolicy::default()).unwrap();
        assert!(k[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn scalar_exo_observer() {
        let g = exo_observer_gain(&m(&[&[0.0]]), &m(&[&[1.0]]), &NumericPolicy::default()).unwrap();
        assert!((g.p_tilde[(0, 0)] - 1.0).abs() < 1e-10);
        assert!((g.l[(0, 0)] + 1.0).abs() < 1e-10);
        assert_eq!(g.sign, GainSign::Negative);
    }

    #[test]
    fn harmonic_exo_observer_is_certified() {
        let s = harmonic();
        let f = m(&[&[0.0, -2.0]]);
        let g = exo_observer_gain(&s, &f, &NumericPolicy::default()).unwrap();
        assert!(is_hurwitz_with(&(&s + &(&g.l * &f)), &NumericPolicy::default()));
        assert_eq!(g.j, g.l);
    }

    #[test]
    fn static_design_gamma_and_feedforward_identity() {
        let net = network(false);
        let ov = GainOverrides::default();
        let gs = synthesize_theorem2(&request(&net, &ov, &[1.0; 3], ObserverKind::State)).unwrap();
        let want = m(&[&[1.6491, -0.3375], &[-0.3375, 0.6754]]);
        assert!(gs.shared.gamma.max_abs_diff(&want) < 1e-3);
        for a in &gs.agents {
            let AgentController::Static { k1, k2, regulator } = &a.controller else {
                panic!("static controller expected")
            };
            assert_eq!(*k2, &regulator.u - &(k1 * &regulator.x));
        }
        assert!(gs.all_certified());
    }

    #[test]
    fn dynamic_state_accepts_harmonic_gain_overrides() {
        let net = network(false);
        let ov = GainOverrides {
            l: Some(m(&[&[0.0], &[1.5]])),
            all_agents: AgentOverride {
                kx: Some(m(&[&[-4.95, -2.85]])),
                kz: Some(m(&[&[8.1, 0.3]])),
                ..Default::default()
            },
            agents: vec![],
        };
        let gs = synthesize_theorem3(&request(&net, &ov, &[1.0; 3], ObserverKind::State)).unwrap();
        assert!(gs.shared.l_overridden);
        assert!(gs.agents.iter().all(|a| a.overridden));
        assert!(gs.certificates.iter().any(|c| c.overridden && c.certified));
    }

    #[test]
    fn dynamic_state_synthesized() {
        let net = network(false);
        let ov = GainOverrides::default();
        let gs = synthesize_theorem3(&request(&net, &ov, &[1.0; 3], ObserverKind::State)).unwrap();
        assert_eq!(gs.agents[0].controller.state_len(), 2);
    }

    #[test]
    fn malformed_internal_model_fails_certification() {
        let plant = example_plant(2.0);
        let good = build_internal_model(&harmonic(), 1);
        let bad = InternalModel::from_pair(good.beta.clone(), Matrix::zeros(2, 1), 1);
        let err = dynamic_state_design(
            &plant,
            &bad,
            Some(&m(&[&[-4.95, -2.85]])),
            Some(&m(&[&[8.1, 0.3]])),
            &NumericPolicy::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SynthesisError::CertificationFailed(_)));
    }

    #[test]
    fn output_feedback_example_agents() {
        let net = network(true);
        let ov = GainOverrides::default();
        let gs = synthesize_theorem5(&request(&net, &ov, &[1.0; 3], ObserverKind::Output)).unwrap();
        let AgentController::OutputFeedback { p1, p2, .. } = &gs.agents[0].controller else {
            panic!("output feedback expected")
        };
        assert_eq!(p1.shape(), (4, 4));
        assert_eq!(p2.shape(), (4, 1));
    }

    #[test]
    fn output_observer_needs_undirected_subgraph() {
        let net = network(false);
        let ov = GainOverrides::default();
        let err = synthesize_theorem5(&request(&net, &ov, &[1.0; 3], ObserverKind::Output)).unwrap_err();
        assert_eq!(err, SynthesisError::AssumptionViolated(6));
    }

    #[test]
    fn zero_output_map_not_observable() {
        let mut cert = Certifier {
            policy: &NumericPolicy::default(),
            log: vec![],
        };
        let mut p = example_plant(2.0);
        p.c = Matrix::zeros(1, 2);
        let err = output_feedback_agent(1, &p, &harmonic(), &AgentOverride::default(), &mut cert)
            .unwrap_err();
        assert_eq!(err, SynthesisError::NotObservable);
    }

    #[test]
    fn failing_transmission_is_reported_for_agent() {
        let mut net = network(false);
        net.subsystems[1].nominal.c = Matrix::zeros(1, 2);
        let ov = GainOverrides::default();
        let err = synthesize_theorem2(&request(&net, &ov, &[1.0; 3], ObserverKind::State)).unwrap_err();
        assert_eq!(err, SynthesisError::NoSolution.for_agent(2));
    }

    #[test]
    fn scalar_chain_end_to_end() {
        let edges = [Edge::new(1, 2, 1.0), Edge::new(2, 3, 1.0), Edge::new(3, 2, 1.0)];
        let plant = PlantMatrices {
            a: m(&[&[0.5]]),
            b: m(&[&[1.0]]),
            c: m(&[&[1.0]]),
            d: m(&[&[-1.0]]),
            e: m(&[&[0.0]]),
        };
        let net = NetworkModel {
            graph: DirectedGraph::new(3, 1, &edges).unwrap(),
            subsystems: vec![LtiSubsystem::new(plant); 3],
            exosystem: Exosystem {
                s: m(&[&[0.0]]),
                f: m(&[&[1.0]]),
                v0: vec![1.0],
            },
        };
        let ov = GainOverrides::default();
        let gs = synthesize_theorem5(&request(&net, &ov, &[1.0; 3], ObserverKind::Output)).unwrap();
        assert!(gs.all_certified());
        assert!(gs.certificates.len() >= 3 * 3);
    }
}
