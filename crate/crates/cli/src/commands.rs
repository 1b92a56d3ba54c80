use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use coopreg::scenario::scenario_hash;
use coopreg::sim::{compute_metrics, run_scenario, Metrics, Scenario};
use coopreg::synthesis::{check_assumptions, synthesize, GainSet, ObserverKind};
use coopreg::{Matrix, NumericPolicy};
use serde::Serialize;

use crate::builtin::load;
use crate::error::{CliError, Failure};

fn policy() -> NumericPolicy<f64> {
    NumericPolicy::from_env()
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn failing_agents(flags: &[bool]) -> String {
    let bad: Vec<String> = flags
        .iter()
        .enumerate()
        .filter(|(_, &ok)| !ok)
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    if bad.is_empty() {
        String::new()
    } else {
        format!(" (agents {})", bad.join(", "))
    }
}

/// Prints every solvability condition. Returns whether all conditions the
/// selected controller and observer need are met.
pub fn check(source: &str, out: &mut dyn Write) -> Result<bool, CliError> {
    let (sc, hash) = load(source)?;
    let net = &sc.network;
    let policy = policy();
    writeln!(out, "scenario {source} ({})", &hash[..12])?;
    writeln!(
        out,
        "graph: {} followers, {} informed",
        net.graph.n_followers(),
        net.graph.n_informed()
    )?;
    let a1 = net.graph.check_assumption1();
    writeln!(out, "assumption 1 (every follower reachable from an informed one): {}", pass(a1))?;
    for i in net.graph.unreachable_followers() {
        writeln!(out, "  follower {i} is not reachable from any informed follower")?;
    }
    let a6_required = sc.observer == ObserverKind::Output;
    let a6 = net.graph.check_assumption6();
    let mut ok = a1 && (a6 || !a6_required);
    match net.validate() {
        Err(e) => {
            writeln!(out, "dimensions: FAIL ({e})")?;
            ok = false;
        }
        Ok(()) => {
            let r = check_assumptions(&net.subsystems, &net.exosystem, &policy);
            writeln!(
                out,
                "assumption 2 (no exosystem mode in the open left half-plane): {}{}",
                pass(r.a2()),
                if r.a2() { "" } else { " (advisory only)" }
            )?;
            writeln!(
                out,
                "assumption 3 (every (A_i, B_i) stabilizable): {}{}",
                pass(r.a3()),
                failing_agents(&r.stabilizable)
            )?;
            writeln!(out, "assumption 4 ((S, F) detectable): {}", pass(r.a4()))?;
            writeln!(
                out,
                "assumption 5 (rank condition at every eigenvalue of S): {}{}",
                pass(r.a5()),
                failing_agents(&r.transmission)
            )?;
            if r.all_hold() {
                writeln!(out, "Assumptions 2-5 are satisfied")?;
            }
            ok &= r.required_hold();
        }
    }
    writeln!(
        out,
        "assumption 6 (undirected uninformed subgraph): {}{}",
        pass(a6),
        if a6_required { "" } else { " (not required)" }
    )?;
    writeln!(out, "result: {}", if ok { "ok" } else { "not solvable as configured" })?;
    Ok(ok)
}

#[derive(Serialize)]
struct GainDocument<'a> {
    scenario_hash: &'a str,
    gains: &'a GainSet<f64>,
}

fn print_matrix(out: &mut dyn Write, name: &str, m: &Matrix<f64>) -> std::io::Result<()> {
    writeln!(out, "{name} =")?;
    for i in 0..m.nrows() {
        let cells: Vec<String> = m.row_slice(i).iter().map(|x| format!("{x:>9.4}")).collect();
        writeln!(out, "  [{}]", cells.join(", "))?;
    }
    Ok(())
}

/// Synthesizes all gains, prints the shared ones and the certificates, and
/// optionally writes the gain set as JSON.
pub fn synth(source: &str, out_path: Option<&Path>, out: &mut dyn Write) -> Result<GainSet<f64>, CliError> {
    let (sc, hash) = load(source)?;
    let gains = synthesize(&sc.synthesis_request(policy()), sc.controller)?;
    let shared = &gains.shared;
    match sc.observer {
        ObserverKind::State => {
            print_matrix(out, "P", &shared.p)?;
            print_matrix(out, "Gamma", &shared.gamma)?;
        }
        ObserverKind::Output => {
            print_matrix(out, "P_tilde", &shared.p_tilde)?;
            print_matrix(out, "J", &shared.j)?;
        }
    }
    print_matrix(out, "L", &shared.l)?;
    for c in &gains.certificates {
        let who = c.agent.map_or_else(String::new, |a| format!("agent {a}: "));
        let origin = if c.overridden { "override" } else { "synthesized" };
        writeln!(out, "{who}{} [{origin}] certified: {}", c.label, c.certified)?;
    }
    if let Some(path) = out_path {
        let doc = GainDocument {
            scenario_hash: &hash,
            gains: &gains,
        };
        let text = serde_json::to_string_pretty(&doc)
            .map_err(|e| CliError::new(Failure::Io, e))?;
        fs::write(path, text).map_err(|e| CliError::new(Failure::Io, format!("{}: {e}", path.display())))?;
        writeln!(out, "gains written to {}", path.display())?;
    }
    Ok(gains)
}

/// Command-line adjustments applied to a scenario before a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: Option<u64>,
    pub record_every: Option<usize>,
}

impl RunOptions {
    pub fn apply(&self, sc: &mut Scenario<f64>) {
        if let Some(dt) = self.dt {
            sc.integrator.dt = dt;
        }
        if let Some(t) = self.t_final {
            sc.integrator.t_final = t;
        }
        if let Some(seed) = self.seed {
            sc.uncertainty.seed = seed;
        }
        if let Some(r) = self.record_every {
            sc.integrator.record_every = r;
        }
    }
}

#[derive(Serialize)]
struct MetricsDocument<'a> {
    #[serde(flatten)]
    metrics: &'a Metrics,
    scenario_hash: &'a str,
    seed: u64,
    certificates_passed: usize,
    certificates_total: usize,
}

/// Output files of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace_csv: PathBuf,
    pub metrics_json: PathBuf,
    pub metrics: Metrics,
}

/// Simulates an already loaded scenario and writes `trace.csv` and
/// `metrics.json` into `out_dir`.
pub fn run_loaded(sc: &Scenario<f64>, out_dir: &Path, out: &mut dyn Write) -> Result<RunOutput, CliError> {
    let hash = scenario_hash(sc);
    let trace = run_scenario(sc, &policy(), &hash)?;
    let metrics = compute_metrics(&trace, sc.integrator.settle_epsilon);
    let io = |p: &Path, e: std::io::Error| CliError::new(Failure::Io, format!("{}: {e}", p.display()));
    fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let trace_csv = out_dir.join("trace.csv");
    let file = fs::File::create(&trace_csv).map_err(|e| io(&trace_csv, e))?;
    trace.write_csv(file).map_err(|e| io(&trace_csv, e))?;
    let metrics_json = out_dir.join("metrics.json");
    let doc = MetricsDocument {
        metrics: &metrics,
        scenario_hash: &hash,
        seed: trace.meta.seed,
        certificates_passed: trace.meta.certificates_passed,
        certificates_total: trace.meta.certificates_total,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::new(Failure::Io, e))?;
    fs::write(&metrics_json, text).map_err(|e| io(&metrics_json, e))?;
    let settled = metrics
        .settled_time
        .map_or_else(|| "not settled".to_string(), |t| format!("{t:.3}"));
    writeln!(
        out,
        "final_output_norm={:.3e} settled_time={} estimation_error_final={:.3e} samples={}",
        metrics.final_output_norm, settled, metrics.estimation_error_final, metrics.samples
    )?;
    Ok(RunOutput {
        trace_csv,
        metrics_json,
        metrics,
    })
}

pub fn run(source: &str, out_dir: &Path, opts: &RunOptions, out: &mut dyn Write) -> Result<RunOutput, CliError> {
    let (mut sc, _) = load(source)?;
    opts.apply(&mut sc);
    run_loaded(&sc, out_dir, out)
}
