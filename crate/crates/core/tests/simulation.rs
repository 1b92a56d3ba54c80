use coopreg::scenario::{parse_scenario, scenario_hash, ScenarioFile};
use coopreg::sim::{compute_metrics, run_scenario};
use coopreg::NumericPolicy;

/// Two scalar integrators tracking a constant, one informed.
const SCALAR_CHAIN: &str = r#"
[graph]
n_followers = 2
n_informed = 1
edges = [[1, 2, 1.0]]

[exosystem]
s = [[0.0]]
f = [[1.0]]
v0 = [1.0]

[[subsystem]]
copies = 2
a = [[0.0]]
b = [[1.0]]
c = [[1.0]]
d = [[-1.0]]
e = [[0.0]]

[controller]
kind = "static"

[observer]
kind = "state"

[integrator]
dt = 1e-2
t_final = 20.0
record_every = 10
"#;

#[test]
fn scalar_chain_regulates_in_f64() {
    let (sc, hash) = parse_scenario::<f64>(SCALAR_CHAIN).unwrap();
    let trace = run_scenario(&sc, &NumericPolicy::default(), &hash).unwrap();
    let m = compute_metrics(&trace, 1e-2);
    assert!(m.final_output_norm < 1e-4, "{m:?}");
    assert!(m.gains_monotone);
    assert!(m.bounded);
    assert_eq!(trace.meta.scenario_hash, hash);
}

#[test]
fn scalar_chain_regulates_in_f32() {
    let (sc, hash) = parse_scenario::<f32>(SCALAR_CHAIN).unwrap();
    let trace = run_scenario(&sc, &NumericPolicy::default(), &hash).unwrap();
    let m = compute_metrics(&trace, 1e-2);
    assert!(m.final_output_norm < 1e-3, "{m:?}");
}

#[test]
fn repeated_runs_are_bit_identical() {
    let (sc, hash) = parse_scenario::<f64>(SCALAR_CHAIN).unwrap();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let trace = run_scenario(&sc, &NumericPolicy::default(), &hash).unwrap();
        let mut csv = Vec::new();
        trace.write_csv(&mut csv).unwrap();
        outputs.push(csv);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn serialization_round_trip_preserves_scenario_and_hash() {
    let file = ScenarioFile::parse(SCALAR_CHAIN).unwrap();
    let sc = file.to_scenario::<f64>().unwrap();
    let again = ScenarioFile::from_scenario(&sc);
    let reparsed = ScenarioFile::parse(&again.to_toml()).unwrap().to_scenario::<f64>().unwrap();
    assert_eq!(sc, reparsed);
    assert_eq!(scenario_hash(&sc), scenario_hash(&reparsed));
}
