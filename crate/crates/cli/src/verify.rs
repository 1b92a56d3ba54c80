//! The acceptance criteria, runnable from the binary and from tests.

use std::fmt;
use std::time::Instant;

use coopreg::graph::{DirectedGraph, Edge};
use coopreg::linalg::{is_hurwitz, solve_lyapunov, solve_sylvester, CareProblem};
use coopreg::sim::{
    assemble, assemble_with_gains, compute_metrics, integrate, run_scenario, Scenario, SimError, Trace,
    VectorField, Rk4,
};
use coopreg::synthesis::{
    build_internal_model, check_assumptions, synthesize_theorem2, AgentController, Exosystem, GainOverrides,
    LtiSubsystem, NetworkModel, ObserverKind, PlantMatrices, SynthesisRequest,
};
use coopreg::{Matrix, NumericPolicy};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::builtin::load;
use crate::commands::{run_loaded, RunOptions};

/// Deliberate corruption used to check that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negate every feedforward gain `K2` of the static controller.
    K2Sign,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: expected {}; observed {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.expected,
            self.observed
        )
    }
}

pub const ALL: [u32; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Runs the listed criteria in order (all of them when `only` is empty).
pub fn run_selected(only: &[u32], fault: Option<Fault>) -> Vec<CriterionResult> {
    let ids: Vec<u32> = if only.is_empty() { ALL.to_vec() } else { only.to_vec() };
    ids.into_iter().map(|id| criterion(id, fault)).collect()
}

pub fn criterion(id: u32, fault: Option<Fault>) -> CriterionResult {
    match id {
        1 => care_reproduction(),
        2 => internal_model_reproduction(),
        3 => adaptive_observer_convergence(),
        4 => nominal_regulation(fault),
        5 => robust_regulation(),
        6 => output_feedback_regulation(),
        7 => regulator_property_suite(),
        8 => diagonal_scaling_suite(),
        9 => kernel_oracles(),
        10 => determinism(),
        _ => CriterionResult {
            id,
            name: "unknown criterion",
            expected: "an id in 1..=10".into(),
            observed: "none".into(),
            passed: false,
        },
    }
}

fn result(id: u32, name: &'static str, expected: impl Into<String>, observed: impl Into<String>, passed: bool) -> CriterionResult {
    CriterionResult {
        id,
        name,
        expected: expected.into(),
        observed: observed.into(),
        passed,
    }
}

fn m(rows: &[&[f64]]) -> Matrix<f64> {
    Matrix::from_rows(rows).expect("literal matrix")
}

fn harmonic() -> Matrix<f64> {
    m(&[&[0.0, 1.0], &[-2.0, 0.0]])
}

fn builtin(name: &str) -> Scenario<f64> {
    load(&format!("@{name}")).expect("built-in scenarios parse").0
}

fn policy() -> NumericPolicy<f64> {
    NumericPolicy::from_env()
}

fn simulate(sc: &Scenario<f64>) -> Result<Trace<f64>, SimError> {
    run_scenario(sc, &policy(), "")
}

/// Wall time is reported only when over budget, so passing reports stay
/// identical from run to run.
fn budget(elapsed: f64, limit: f64) -> String {
    if elapsed < limit {
        format!("within {limit} s")
    } else {
        format!("took {elapsed:.1} s")
    }
}

fn sim_failure(e: &SimError) -> String {
    format!("simulation failed: {e}")
}

pub fn care_reproduction() -> CriterionResult {
    let name = "Riccati solution and adaptation weight";
    let start = Instant::now();
    let solved = CareProblem::unit_weights(harmonic(), Matrix::identity(2)).solve_with(&policy());
    let elapsed = start.elapsed().as_secs_f64();
    let expected = "|P - P_ref| <= 5e-4, |P^2 - Gamma_ref| <= 1e-3, < 1 s";
    match solved {
        Err(e) => result(1, name, expected, format!("solver error: {e}"), false),
        Ok(sol) => {
            let p_ref = m(&[&[1.2739, -0.1623], &[-0.1623, 0.8057]]);
            let g_ref = m(&[&[1.6491, -0.3375], &[-0.3375, 0.6754]]);
            let dp = sol.p.max_abs_diff(&p_ref);
            let dg = (&sol.p * &sol.p).max_abs_diff(&g_ref);
            result(
                1,
                name,
                expected,
                format!("|dP| = {dp:.2e}, |dGamma| = {dg:.2e}, {}", budget(elapsed, 1.0)),
                dp <= 5e-4 && dg <= 1e-3 && elapsed < 1.0,
            )
        }
    }
}

pub fn internal_model_reproduction() -> CriterionResult {
    let model = build_internal_model(&harmonic(), 1);
    let g2 = m(&[&[0.0], &[1.0]]);
    let exact = model.g1 == harmonic() && model.g2 == g2;
    result(
        2,
        "internal model of the harmonic exosystem",
        "G1 = [[0,1],[-2,0]], G2 = [0;1] exactly",
        format!("G1 = {:?}, G2 = {:?}", model.g1.to_rows(), model.g2.to_rows()),
        exact,
    )
}

pub fn adaptive_observer_convergence() -> CriterionResult {
    let name = "adaptive observers on the 6-follower graph";
    let expected = "max |xi - v| < 1e-4 at t = 30, gains nondecreasing, plateau < 1e-3, < 30 s";
    let mut sc = builtin("observer");
    sc.integrator.dt = 1e-3;
    sc.integrator.t_final = 30.0;
    let start = Instant::now();
    let trace = match simulate(&sc) {
        Ok(t) => t,
        Err(e) => return result(3, name, expected, sim_failure(&e), false),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let metrics = compute_metrics(&trace, sc.integrator.settle_epsilon);
    let err = trace.estimation_error(trace.index_at(30.0));
    result(
        3,
        name,
        expected,
        format!(
            "error {err:.2e}, monotone {}, plateau {:.2e}, {}",
            metrics.gains_monotone,
            metrics.gain_plateau,
            budget(elapsed, 30.0)
        ),
        err < 1e-4 && metrics.gains_monotone && metrics.gain_plateau < 1e-3 && elapsed < 30.0,
    )
}

fn faulty_trace(sc: &Scenario<f64>) -> Result<Trace<f64>, SimError> {
    let system = assemble(sc, &policy())?;
    let mut gains = system.gains().clone();
    for agent in &mut gains.agents {
        if let AgentController::Static { k2, .. } = &mut agent.controller {
            *k2 = -&*k2;
        }
    }
    let system = assemble_with_gains(sc, gains, system.deltas().to_vec())?;
    integrate(&system)
}

pub fn nominal_regulation(fault: Option<Fault>) -> CriterionResult {
    let name = "nominal regulation with static controllers";
    let expected = "max |e| < 1e-2 for t >= 50 and < 1e-3 at t = 100";
    let mut sc = builtin("nominal");
    sc.integrator.t_final = 100.0;
    let trace = match fault {
        None => simulate(&sc),
        Some(Fault::K2Sign) => faulty_trace(&sc),
    };
    let trace = match trace {
        Ok(t) => t,
        Err(e) => return result(4, name, expected, sim_failure(&e), false),
    };
    let worst_after_50 = (trace.index_at(50.0)..trace.len())
        .map(|k| trace.output_norm(k))
        .fold(0.0, f64::max);
    let at_100 = trace.output_norm(trace.index_at(100.0));
    result(
        4,
        name,
        expected,
        format!("max over t >= 50: {worst_after_50:.2e}, at t = 100: {at_100:.2e}"),
        worst_after_50 < 1e-2 && at_100 < 1e-3,
    )
}

pub fn robust_regulation() -> CriterionResult {
    let name = "robust regulation over 20 uncertainty draws";
    let expected = "all 20 seeds reach max |e(100)| < 1e-2, < 300 s";
    let base = builtin("example");
    let start = Instant::now();
    let outcomes: Vec<(u64, Result<f64, String>)> = (1..=20u64)
        .into_par_iter()
        .map(|seed| {
            let mut sc = base.clone();
            sc.uncertainty.seed = seed;
            sc.integrator.t_final = 100.0;
            let r = simulate(&sc)
                .map(|t| t.output_norm(t.index_at(100.0)))
                .map_err(|e| e.to_string());
            (seed, r)
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for (seed, r) in &outcomes {
        match r {
            Ok(e) if *e < 1e-2 => worst = worst.max(*e),
            Ok(e) => {
                worst = worst.max(*e);
                failed.push(format!("seed {seed}: {e:.2e}"));
            }
            Err(msg) => failed.push(format!("seed {seed}: {msg}")),
        }
    }
    let observed = if failed.is_empty() {
        format!("worst {worst:.2e}, {}", budget(elapsed, 300.0))
    } else {
        format!("{} failing ({}), {}", failed.len(), failed.join("; "), budget(elapsed, 300.0))
    };
    result(5, name, expected, observed, failed.is_empty() && elapsed < 300.0)
}

pub fn output_feedback_regulation() -> CriterionResult {
    let name = "output observers with output feedback";
    let expected = "max |xi - v| < 1e-3 at t = 50, max |e| < 1e-2 at t = 100, gains nondecreasing";
    let mut sc = builtin("output");
    sc.integrator.t_final = 100.0;
    let trace = match simulate(&sc) {
        Ok(t) => t,
        Err(e) => return result(6, name, expected, sim_failure(&e), false),
    };
    let metrics = compute_metrics(&trace, sc.integrator.settle_epsilon);
    let est = trace.estimation_error(trace.index_at(50.0));
    let out = trace.output_norm(trace.index_at(100.0));
    result(
        6,
        name,
        expected,
        format!("estimation {est:.2e}, output {out:.2e}, monotone {}", metrics.gains_monotone),
        est < 1e-3 && out < 1e-2 && metrics.gains_monotone,
    )
}

fn random_matrix(rng: &mut Xoshiro256PlusPlus, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn single_agent_network(plant: PlantMatrices<f64>, s: Matrix<f64>, f: Matrix<f64>) -> NetworkModel<f64> {
    let q = s.nrows();
    NetworkModel {
        graph: DirectedGraph::new(1, 1, &[]).expect("single informed follower"),
        subsystems: vec![LtiSubsystem::new(plant)],
        exosystem: Exosystem {
            s,
            f,
            v0: vec![1.0; q],
        },
    }
}

/// Smallest singular value of `[b, ab, ..., a^{n-1}b]`; near-zero values
/// mark pairs whose stabilizing gains are numerically meaningless.
fn controllability_margin(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    let (a, b) = (to_na(a), to_na(b));
    let (n, m) = (a.nrows(), b.ncols());
    let mut ctrb = DMatrix::zeros(n, n * m);
    let mut block = b;
    for k in 0..n {
        ctrb.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = &a * block;
    }
    ctrb.singular_values().min()
}

pub fn regulator_property_suite() -> CriterionResult {
    let name = "regulator equations on random instances";
    let expected = "100 instances, both residuals <= 1e-9, K2 = U - K1 X exactly";
    let policy = policy();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed_0007);
    let (mut done, mut worst, mut problems) = (0, 0.0f64, Vec::new());
    let mut draws = 0;
    while done < 100 && draws < 10_000 {
        draws += 1;
        let n = rng.gen_range(1..=4);
        let mp = rng.gen_range(1..=2);
        let q = rng.gen_range(1..=3);
        let plant = PlantMatrices {
            a: random_matrix(&mut rng, n, n),
            b: random_matrix(&mut rng, n, mp),
            c: random_matrix(&mut rng, mp, n),
            d: random_matrix(&mut rng, mp, q),
            e: random_matrix(&mut rng, n, q),
        };
        let s = random_matrix(&mut rng, q, q);
        let f = random_matrix(&mut rng, 1, q);
        let net = single_agent_network(plant.clone(), s.clone(), f);
        let report = check_assumptions(&net.subsystems, &net.exosystem, &policy);
        if !report.required_hold() || controllability_margin(&plant.a, &plant.b) < 1e-3 {
            continue;
        }
        done += 1;
        let overrides = GainOverrides::default();
        let req = SynthesisRequest {
            network: &net,
            observer: ObserverKind::State,
            overrides: &overrides,
            taus: &[1.0],
            policy,
        };
        match synthesize_theorem2(&req) {
            Err(e) => problems.push(format!("instance {done}: {e}")),
            Ok(gains) => {
                if let AgentController::Static { k1, k2, regulator } = &gains.agents[0].controller {
                    let (r1, r2) = regulator.residuals(&plant, &s);
                    worst = worst.max(r1).max(r2);
                    if r1 > 1e-9 || r2 > 1e-9 {
                        problems.push(format!("instance {done}: residuals {r1:.1e}, {r2:.1e}"));
                    }
                    let identity = &regulator.u - &(k1 * &regulator.x);
                    if *k2 != identity {
                        problems.push(format!("instance {done}: K2 differs from U - K1 X"));
                    }
                } else {
                    problems.push(format!("instance {done}: not a static controller"));
                }
            }
        }
    }
    let observed = if problems.is_empty() {
        format!("{done} instances, worst residual {worst:.2e}")
    } else {
        format!("{done} instances, {} problems: {}", problems.len(), problems.join("; "))
    };
    result(7, name, expected, observed, done == 100 && problems.is_empty())
}

fn random_reachable_graph(rng: &mut Xoshiro256PlusPlus) -> (usize, usize, Vec<Edge<f64>>) {
    let n = rng.gen_range(2..=10);
    let informed = rng.gen_range(1..n);
    let mut edges = Vec::new();
    for to in informed + 1..=n {
        let from = rng.gen_range(1..to);
        edges.push(Edge::new(from, to, rng.gen_range(0.1..2.0)));
        for other in 1..=n {
            if other != to && other != from && rng.gen_bool(0.2) {
                edges.push(Edge::new(other, to, rng.gen_range(0.1..2.0)));
            }
        }
    }
    (n, informed, edges)
}

pub fn diagonal_scaling_suite() -> CriterionResult {
    let name = "diagonal scaling on random reachable graphs";
    let expected = "100 graphs, q > 0 and lambda_min(G L1 + L1' G) > 0, matching an independent solve";
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed_0008);
    let mut problems = Vec::new();
    let mut min_lambda = f64::INFINITY;
    for g in 1..=100 {
        let (n, informed, edges) = random_reachable_graph(&mut rng);
        let graph = match DirectedGraph::new(n, informed, &edges) {
            Ok(graph) => graph,
            Err(e) => {
                problems.push(format!("graph {g}: {e}"));
                continue;
            }
        };
        if !graph.check_assumption1() {
            problems.push(format!("graph {g}: generator produced an unreachable follower"));
            continue;
        }
        let scaling = match graph.laplacian_partition().diagonal_scaling(&policy()) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("graph {g}: {e}"));
                continue;
            }
        };
        // independent oracle
        let k = n - informed;
        let mut l1 = DMatrix::<f64>::zeros(k, k);
        for e in &edges {
            let (i, j) = (e.to - informed - 1, e.from);
            l1[(i, i)] += e.weight;
            if j > informed {
                l1[(i, j - informed - 1)] -= e.weight;
            }
        }
        let q = l1.transpose().lu().solve(&DVector::from_element(k, 1.0)).expect("nonsingular");
        let gm = DMatrix::from_diagonal(&q);
        let sym = &gm * &l1 + l1.transpose() * &gm;
        let lambda = sym.symmetric_eigenvalues().min();
        min_lambda = min_lambda.min(lambda);
        let dq = q.iter().zip(&scaling.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if q.min() <= 0.0 || lambda <= 0.0 || scaling.lambda0 <= 0.0 {
            problems.push(format!("graph {g}: min q {:.2e}, lambda {lambda:.2e}", q.min()));
        }
        if dq > 1e-9 * (1.0 + q.amax()) || (lambda - scaling.lambda0).abs() > 1e-9 * (1.0 + lambda.abs()) {
            problems.push(format!("graph {g}: disagrees with oracle (dq {dq:.1e})"));
        }
    }
    let observed = if problems.is_empty() {
        format!("100 graphs, smallest lambda0 {min_lambda:.3e}")
    } else {
        format!("{} problems: {}", problems.len(), problems.join("; "))
    };
    result(8, name, expected, observed, problems.is_empty())
}

fn to_na(a: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Solves `a X + X b = c` by forming the Kronecker system directly.
fn oracle_sylvester(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (n, m) = (a.nrows(), b.nrows());
    let op = DMatrix::<f64>::identity(m, m).kronecker(a) + b.transpose().kronecker(&DMatrix::<f64>::identity(n, n));
    let rhs = DVector::from_column_slice(c.as_slice());
    let x = op.lu().solve(&rhs)?;
    Some(DMatrix::from_column_slice(n, m, x.as_slice()))
}

fn max_diff(a: &Matrix<f64>, b: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - b[(i, j)]).abs())
        .fold(0.0, f64::max)
}

struct Rotation<'a>(&'a Matrix<f64>);

impl VectorField<f64> for Rotation<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn eval(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        self.0.mul_vec_into(x, dx);
    }
}

pub fn kernel_oracles() -> CriterionResult {
    let name = "Lyapunov, Sylvester, Hurwitz and RK4 kernels against oracles";
    let expected = "equation solves within 1e-10, 100/100 Hurwitz agreements, RK4 within 1e-9 over t = 1";
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed_0009);
    let mut problems = Vec::new();
    let mut worst_solve = 0.0f64;

    for case in 1..=100 {
        let n = rng.gen_range(1..=5);
        let mut a = random_matrix(&mut rng, n, n);
        for i in 0..n {
            a[(i, i)] -= 3.0;
        }
        let w = random_matrix(&mut rng, n, n);
        let q = &w + &w.transpose();
        let na = to_na(&a);
        let oracle = oracle_sylvester(&na.transpose(), &na, &(-to_na(&q)));
        match (solve_lyapunov(&a, &q), oracle) {
            (Ok(x), Some(o)) => {
                let d = max_diff(&x, &o);
                worst_solve = worst_solve.max(d);
                if d > 1e-10 {
                    problems.push(format!("lyapunov {case}: {d:.1e}"));
                }
            }
            (r, o) => problems.push(format!("lyapunov {case}: solver ok {}, oracle ok {}", r.is_ok(), o.is_some())),
        }

        let k = rng.gen_range(1..=5);
        let mut sa = random_matrix(&mut rng, n, n);
        let mut sb = random_matrix(&mut rng, k, k);
        for i in 0..n {
            sa[(i, i)] += 3.0;
        }
        for i in 0..k {
            sb[(i, i)] += 3.0;
        }
        let c = random_matrix(&mut rng, n, k);
        match (solve_sylvester(&sa, &sb, &c), oracle_sylvester(&to_na(&sa), &to_na(&sb), &to_na(&c))) {
            (Ok(x), Some(o)) => {
                let d = max_diff(&x, &o);
                worst_solve = worst_solve.max(d);
                if d > 1e-10 {
                    problems.push(format!("sylvester {case}: {d:.1e}"));
                }
            }
            (r, o) => problems.push(format!("sylvester {case}: solver ok {}, oracle ok {}", r.is_ok(), o.is_some())),
        }
    }

    let mut agree = 0;
    let mut stable = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=5);
        let mut a = random_matrix(&mut rng, n, n);
        let shift = rng.gen_range(-1.5..0.5);
        for i in 0..n {
            a[(i, i)] += shift;
        }
        let brute = to_na(&a).complex_eigenvalues().iter().all(|z| z.re < 0.0);
        stable += usize::from(brute);
        if is_hurwitz(&a) == brute {
            agree += 1;
        }
    }
    if agree != 100 {
        problems.push(format!("hurwitz agreement {agree}/100"));
    }

    let s = harmonic();
    let v0 = [1.0, 0.5];
    let mut v = v0.to_vec();
    let mut rk = Rk4::new(2);
    let h = 1e-3;
    for k in 0..1000 {
        rk.step(&Rotation(&s), k as f64 * h, h, &mut v);
    }
    let w = 2f64.sqrt();
    let exact = [
        v0[0] * w.cos() + v0[1] * w.sin() / w,
        -v0[0] * w * w.sin() + v0[1] * w.cos(),
    ];
    let rk_err = (v[0] - exact[0]).abs().max((v[1] - exact[1]).abs());
    if rk_err > 1e-9 {
        problems.push(format!("rk4 error {rk_err:.1e}"));
    }

    let observed = format!(
        "worst solve diff {worst_solve:.1e}, hurwitz {agree}/100 ({stable} stable), rk4 {rk_err:.1e}{}",
        if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
    );
    result(9, name, expected, observed, problems.is_empty())
}

pub fn determinism() -> CriterionResult {
    let name = "bit-identical traces across runs";
    let expected = "two runs of the same scenario and seed give identical CSV bytes";
    let opts = RunOptions {
        seed: Some(7),
        t_final: Some(20.0),
        ..RunOptions::default()
    };
    let attempt = || -> Result<(Vec<u8>, Vec<u8>), String> {
        let mut sc = builtin("example");
        opts.apply(&mut sc);
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let out = run_loaded(&sc, dir.path(), &mut std::io::sink()).map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(&out.trace_csv).map_err(|e| e.to_string())?);
        }
        let second = bytes.pop().unwrap_or_default();
        Ok((bytes.pop().unwrap_or_default(), second))
    };
    match attempt() {
        Err(e) => result(10, name, expected, format!("run failed: {e}"), false),
        Ok((a, b)) => result(
            10,
            name,
            expected,
            format!("{} and {} bytes, identical: {}", a.len(), b.len(), a == b),
            !a.is_empty() && a == b,
        ),
    }
}
