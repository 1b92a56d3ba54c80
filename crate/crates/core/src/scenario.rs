//! TOML scenario files.
//!
//! ```toml
//! [graph]
//! n_followers = 3
//! n_informed = 1
//! edges = [[1, 2, 1.0], [2, 3, 1.0]]   # from, to, weight
//!
//! [exosystem]
//! s = [[0.0, 1.0], [-2.0, 0.0]]
//! f = [[0.0, -2.0]]
//! v0 = [1.0, 0.0]
//!
//! [[subsystem]]
//! copies = 3
//! a = [[0.0, 1.0], [0.0, 0.0]]
//! b = [[0.0], [2.0]]
//! c = [[1.0, 0.0]]
//! d = [[0.0, 2.0]]
//! e = [[2.0, 0.0], [0.0, 1.0]]
//!
//! [controller]
//! kind = "static"
//!
//! [observer]
//! kind = "state"
//! ```
//!
//! Matrices are written row by row. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{DirectedGraph, Edge, GraphError};
use crate::sim::{
    AgentInitial, IntegratorConfig, Method, PlantMatrix, Scenario, UncertaintyRange,
    UncertaintySpec,
};
use crate::synthesis::{
    AgentOverride, ControllerKind, Exosystem, GainOverrides, LtiSubsystem, NetworkModel,
    ObserverKind, PlantMatrices,
};
use crate::{Matrix, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Matrices are row lists in the document; ragged rows fail to deserialize.
type Rows = Matrix<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub graph: GraphSection,
    pub exosystem: ExosystemSection,
    pub subsystem: Vec<SubsystemSection>,
    pub controller: KindSection<ControllerKind>,
    pub observer: KindSection<ObserverKind>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<OverridesSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub n_followers: usize,
    pub n_informed: usize,
    /// `[from, to, weight]`, 1-based follower indices.
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExosystemSection {
    pub s: Rows,
    pub f: Rows,
    pub v0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemSection {
    /// Repeat this entry for that many consecutive followers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copies: Option<usize>,
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    pub d: Rows,
    pub e: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_a: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_b: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_d: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindSection<K> {
    pub kind: K,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::t_final")]
    pub t_final: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "defaults::record_every")]
    pub record_every: usize,
    #[serde(default = "defaults::settle_epsilon")]
    pub settle_epsilon: f64,
    #[serde(default = "defaults::divergence_bound")]
    pub divergence_bound: f64,
}

mod defaults {
    pub fn dt() -> f64 {
        1e-3
    }
    pub fn t_final() -> f64 {
        100.0
    }
    pub fn record_every() -> usize {
        10
    }
    pub fn settle_epsilon() -> f64 {
        1e-2
    }
    pub fn divergence_bound() -> f64 {
        1e9
    }
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            dt: defaults::dt(),
            t_final: defaults::t_final(),
            method: Method::Rk4,
            record_every: defaults::record_every(),
            settle_epsilon: defaults::settle_epsilon(),
            divergence_bound: defaults::divergence_bound(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub range: Vec<RangeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSection {
    pub matrix: PlantMatrix,
    /// 1-based `[row, column]`.
    pub entry: (usize, usize),
    pub low: f64,
    pub high: f64,
    #[serde(default)]
    pub lower_open: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<Vec<usize>>,
}

/// Gains applied to every agent unless an `[[overrides.agent]]` entry
/// supplies its own.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverridesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kx: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kz: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub li: Option<Rows>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agent: Vec<AgentOverrideSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentOverrideSection {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kx: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kz: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub li: Option<Rows>,
}

fn matrix<T: Scalar>(name: &str, rows: &Rows) -> Result<Matrix<T>, ScenarioError> {
    if !rows.is_finite() {
        return Err(ScenarioError::Invalid(format!("{name} has non-finite entries")));
    }
    Ok(rows.cast())
}

fn opt_matrix<T: Scalar>(name: &str, rows: &Option<Rows>) -> Result<Option<Matrix<T>>, ScenarioError> {
    rows.as_ref().map(|r| matrix(name, r)).transpose()
}

fn vector<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn rows<T: Scalar>(m: &Matrix<T>) -> Rows {
    m.cast()
}

fn unvector<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

fn num<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn to_override<T: Scalar>(
    ctx: &str,
    k1: &Option<Rows>,
    kx: &Option<Rows>,
    kz: &Option<Rows>,
    li: &Option<Rows>,
) -> Result<AgentOverride<T>, ScenarioError> {
    Ok(AgentOverride {
        k1: opt_matrix(&format!("{ctx}.k1"), k1)?,
        kx: opt_matrix(&format!("{ctx}.kx"), kx)?,
        kz: opt_matrix(&format!("{ctx}.kz"), kz)?,
        li: opt_matrix(&format!("{ctx}.li"), li)?,
    })
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_column(text, s.start))
                .unwrap_or((0, 0));
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn to_scenario<T: Scalar>(&self) -> Result<Scenario<T>, ScenarioError> {
        let g = &self.graph;
        let edges: Vec<Edge<T>> = g
            .edges
            .iter()
            .map(|&(from, to, w)| Edge::new(from, to, T::lit(w)))
            .collect();
        let graph = DirectedGraph::new(g.n_followers, g.n_informed, &edges)?;

        let exosystem = Exosystem {
            s: matrix("exosystem.s", &self.exosystem.s)?,
            f: matrix("exosystem.f", &self.exosystem.f)?,
            v0: vector(&self.exosystem.v0),
        };

        let mut subsystems = Vec::new();
        let mut initial = Vec::new();
        let mut taus = Vec::new();
        for (k, sec) in self.subsystem.iter().enumerate() {
            let ctx = format!("subsystem {}", k + 1);
            let nominal = PlantMatrices {
                a: matrix(&format!("{ctx}.a"), &sec.a)?,
                b: matrix(&format!("{ctx}.b"), &sec.b)?,
                c: matrix(&format!("{ctx}.c"), &sec.c)?,
                d: matrix(&format!("{ctx}.d"), &sec.d)?,
                e: matrix(&format!("{ctx}.e"), &sec.e)?,
            };
            let zeros = PlantMatrices::zeros_like(&nominal);
            let delta = PlantMatrices {
                a: opt_matrix(&format!("{ctx}.delta_a"), &sec.delta_a)?.unwrap_or(zeros.a),
                b: opt_matrix(&format!("{ctx}.delta_b"), &sec.delta_b)?.unwrap_or(zeros.b),
                c: opt_matrix(&format!("{ctx}.delta_c"), &sec.delta_c)?.unwrap_or(zeros.c),
                d: opt_matrix(&format!("{ctx}.delta_d"), &sec.delta_d)?.unwrap_or(zeros.d),
                e: opt_matrix(&format!("{ctx}.delta_e"), &sec.delta_e)?.unwrap_or(zeros.e),
            };
            let copies = sec.copies.unwrap_or(1);
            if copies == 0 {
                return Err(ScenarioError::Invalid(format!("{ctx}: copies must be positive")));
            }
            for _ in 0..copies {
                subsystems.push(LtiSubsystem::new(nominal.clone()).with_delta(delta.clone()));
                initial.push(AgentInitial {
                    x0: sec.x0.as_deref().map(vector),
                    xi0: sec.xi0.as_deref().map(vector),
                    z0: sec.z0.as_deref().map(vector),
                    d0: sec.d0.map(T::lit),
                    c0: sec.c0.map(T::lit),
                });
                taus.push(T::lit(sec.tau.unwrap_or(1.0)));
            }
        }

        let i = &self.integrator;
        let integrator = IntegratorConfig {
            dt: T::lit(i.dt),
            t_final: T::lit(i.t_final),
            method: i.method,
            record_every: i.record_every,
            settle_epsilon: T::lit(i.settle_epsilon),
            divergence_bound: T::lit(i.divergence_bound),
        };

        let uncertainty = match &self.uncertainty {
            None => UncertaintySpec::default(),
            Some(u) => UncertaintySpec {
                seed: u.seed,
                ranges: u
                    .range
                    .iter()
                    .map(|r| UncertaintyRange {
                        matrix: r.matrix,
                        row: r.entry.0,
                        col: r.entry.1,
                        low: T::lit(r.low),
                        high: T::lit(r.high),
                        lower_open: r.lower_open,
                        agents: r.agents.clone(),
                    })
                    .collect(),
            },
        };

        let overrides = match &self.overrides {
            None => GainOverrides::default(),
            Some(o) => GainOverrides {
                l: opt_matrix("overrides.l", &o.l)?,
                all_agents: to_override("overrides", &o.k1, &o.kx, &o.kz, &o.li)?,
                agents: o
                    .agent
                    .iter()
                    .map(|a| {
                        let ctx = format!("overrides.agent {}", a.index);
                        to_override(&ctx, &a.k1, &a.kx, &a.kz, &a.li).map(|ov| (a.index, ov))
                    })
                    .collect::<Result<_, _>>()?,
            },
        };

        Ok(Scenario {
            network: NetworkModel {
                graph,
                subsystems,
                exosystem,
            },
            controller: self.controller.kind,
            observer: self.observer.kind,
            overrides,
            taus,
            initial,
            integrator,
            uncertainty,
        })
    }

    pub fn from_scenario<T: Scalar>(sc: &Scenario<T>) -> Self {
        let net = &sc.network;
        let graph = GraphSection {
            n_followers: net.graph.n_followers(),
            n_informed: net.graph.n_informed(),
            edges: net
                .graph
                .edges()
                .iter()
                .map(|e| (e.from, e.to, num(e.weight)))
                .collect(),
        };
        let exosystem = ExosystemSection {
            s: rows(&net.exosystem.s),
            f: rows(&net.exosystem.f),
            v0: unvector(&net.exosystem.v0),
        };
        let nonzero = |m: &Matrix<T>| (m.max_abs() != T::zero()).then(|| rows(m));
        let subsystem = net
            .subsystems
            .iter()
            .zip(&sc.initial)
            .zip(&sc.taus)
            .map(|((sub, init), &tau)| SubsystemSection {
                copies: None,
                a: rows(&sub.nominal.a),
                b: rows(&sub.nominal.b),
                c: rows(&sub.nominal.c),
                d: rows(&sub.nominal.d),
                e: rows(&sub.nominal.e),
                delta_a: nonzero(&sub.delta.a),
                delta_b: nonzero(&sub.delta.b),
                delta_c: nonzero(&sub.delta.c),
                delta_d: nonzero(&sub.delta.d),
                delta_e: nonzero(&sub.delta.e),
                x0: init.x0.as_deref().map(unvector),
                xi0: init.xi0.as_deref().map(unvector),
                z0: init.z0.as_deref().map(unvector),
                d0: init.d0.map(num),
                c0: init.c0.map(num),
                tau: Some(num(tau)),
            })
            .collect();
        let i = &sc.integrator;
        let integrator = IntegratorSection {
            dt: num(i.dt),
            t_final: num(i.t_final),
            method: i.method,
            record_every: i.record_every,
            settle_epsilon: num(i.settle_epsilon),
            divergence_bound: num(i.divergence_bound),
        };
        let u = &sc.uncertainty;
        let uncertainty = (u.seed != 0 || !u.ranges.is_empty()).then(|| UncertaintySection {
            seed: u.seed,
            range: u
                .ranges
                .iter()
                .map(|r| RangeSection {
                    matrix: r.matrix,
                    entry: (r.row, r.col),
                    low: num(r.low),
                    high: num(r.high),
                    lower_open: r.lower_open,
                    agents: r.agents.clone(),
                })
                .collect(),
        });
        let o = &sc.overrides;
        let opt = |m: &Option<Matrix<T>>| m.as_ref().map(rows);
        let overrides = (o != &GainOverrides::default()).then(|| OverridesSection {
            l: opt(&o.l),
            k1: opt(&o.all_agents.k1),
            kx: opt(&o.all_agents.kx),
            kz: opt(&o.all_agents.kz),
            li: opt(&o.all_agents.li),
            agent: o
                .agents
                .iter()
                .map(|(index, ov)| AgentOverrideSection {
                    index: *index,
                    k1: opt(&ov.k1),
                    kx: opt(&ov.kx),
                    kz: opt(&ov.kz),
                    li: opt(&ov.li),
                })
                .collect(),
        });
        ScenarioFile {
            graph,
            exosystem,
            subsystem,
            controller: KindSection { kind: sc.controller },
            observer: KindSection { kind: sc.observer },
            integrator,
            uncertainty,
            overrides,
        }
    }
}

/// 1-based line and column of byte offset `pos`.
fn line_column(text: &str, pos: usize) -> (usize, usize) {
    let before = &text[..pos.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses a scenario document and returns it with its canonical hash.
pub fn parse_scenario<T: Scalar>(text: &str) -> Result<(Scenario<T>, String), ScenarioError> {
    let file = ScenarioFile::parse(text)?;
    let scenario = file.to_scenario()?;
    let hash = ScenarioFile::from_scenario(&scenario).hash();
    Ok((scenario, hash))
}

/// Canonical hash of an in-memory scenario.
pub fn scenario_hash<T: Scalar>(scenario: &Scenario<T>) -> String {
    ScenarioFile::from_scenario(scenario).hash()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
[graph]
n_followers = 3
n_informed = 1
edges = [[1, 2, 1.0], [2, 3, 0.5], [3, 2, 0.5]]

[exosystem]
s = [[0, 1], [-2, 0]]
f = [[0.0, -2.0]]
v0 = [1.0, 0.0]

[[subsystem]]
copies = 2
a = [[0.0, 1.0], [0.0, 0.0]]
b = [[0.0], [2.0]]
c = [[1.0, 0.0]]
d = [[0.0, 2.0]]
e = [[2.0, 0.0], [0.0, 1.0]]

[[subsystem]]
a = [[0.0, 1.0], [0.0, 0.0]]
b = [[0.0], [2.0]]
c = [[1.0, 0.0]]
d = [[0.0, 2.0]]
e = [[3.0, 0.0], [0.0, 1.0]]
x0 = [0.5, -0.5]
d0 = 2.0

[controller]
kind = "dynamic_state"

[observer]
kind = "state"

[integrator]
t_final = 20.0

[uncertainty]
seed = 11
[[uncertainty.range]]
matrix = "a"
entry = [2, 1]
low = 0.0
high = 0.06
lower_open = true

[overrides]
l = [[0.0], [1.5]]
kx = [[-4.95, -2.85]]
kz = [[8.1, 0.3]]
[[overrides.agent]]
index = 3
kz = [[8.0, 0.3]]
"#;

    #[test]
    fn parses_and_expands_copies() {
        let (sc, hash) = parse_scenario::<f64>(DOC).unwrap();
        assert_eq!(sc.network.subsystems.len(), 3);
        assert_eq!(sc.network.subsystems[2].nominal.e[(0, 0)], 3.0);
        assert_eq!(sc.initial[2].d0, Some(2.0));
        assert_eq!(sc.integrator.dt, 1e-3);
        assert_eq!(sc.integrator.t_final, 20.0);
        assert_eq!(sc.uncertainty.ranges[0].row, 2);
        let ov = sc.overrides.for_agent(3);
        assert_eq!(ov.kz.unwrap()[(0, 0)], 8.0);
        assert_eq!(ov.kx.unwrap()[(0, 0)], -4.95);
        assert_eq!(hash.len(), 64);
    }

    #[test]
    fn round_trip_is_identity() {
        let (sc, hash) = parse_scenario::<f64>(DOC).unwrap();
        let text = ScenarioFile::from_scenario(&sc).to_toml();
        let (again, hash2) = parse_scenario::<f64>(&text).unwrap();
        assert_eq!(sc, again);
        assert_eq!(hash, hash2);
    }

    #[test]
    fn unknown_key_rejected() {
        let doc = DOC.replace("[controller]\n", "[controller]\ngain = 3\n");
        assert!(matches!(
            parse_scenario::<f64>(&doc),
            Err(ScenarioError::Parse { .. })
        ));
    }

    #[test]
    fn ragged_matrix_reports_location() {
        let doc = DOC.replace("s = [[0, 1], [-2, 0]]", "s = [[0, 1], [-2]]");
        match parse_scenario::<f64>(&doc) {
            Err(ScenarioError::Parse { line, message, .. }) => {
                assert_eq!(line, 8);
                assert!(message.contains("row 2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let doc = DOC.replace("n_informed = 1", "n_informed = \"one\"");
        match parse_scenario::<f64>(&doc) {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_precision_load() {
        let (sc, _) = parse_scenario::<f32>(DOC).unwrap();
        assert_eq!(sc.network.exosystem.s[(1, 0)], -2.0f32);
    }
}
