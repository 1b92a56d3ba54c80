//! Scenarios compiled into the binary, addressed as `@name`.

use std::fs;
use std::path::Path;

use coopreg::scenario::parse_scenario;
use coopreg::sim::Scenario;

use crate::error::{CliError, Failure};

pub const BUILTINS: &[(&str, &str)] = &[
    ("example", include_str!("../scenarios/example.toml")),
    ("nominal", include_str!("../scenarios/nominal.toml")),
    ("observer", include_str!("../scenarios/observer.toml")),
    ("output", include_str!("../scenarios/output.toml")),
];

pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Reads `source` as either `@name` or a file path.
pub fn scenario_text(source: &str) -> Result<String, CliError> {
    match source.strip_prefix('@') {
        Some(name) => builtin_text(name).map(str::to_string).ok_or_else(|| {
            let known: Vec<_> = BUILTINS.iter().map(|(n, _)| format!("@{n}")).collect();
            CliError::new(
                Failure::Validation,
                format!("unknown built-in scenario @{name}; available: {}", known.join(", ")),
            )
        }),
        None => fs::read_to_string(Path::new(source))
            .map_err(|e| CliError::new(Failure::Io, format!("{source}: {e}"))),
    }
}

/// Loads and parses a scenario, returning it with its canonical hash.
pub fn load(source: &str) -> Result<(Scenario<f64>, String), CliError> {
    let text = scenario_text(source)?;
    parse_scenario(&text).map_err(|e| CliError::new(Failure::Validation, format!("{source}: {e}")))
}
