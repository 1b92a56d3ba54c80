use std::fmt;
use std::process::ExitCode;

use coopreg::scenario::ScenarioError;
use coopreg::sim::SimError;
use coopreg::synthesis::SynthesisError;

/// Failure classes with stable process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// Bad input or an unmet solvability condition.
    Validation = 1,
    /// Certification failure, divergence, non-convergent solver.
    Numerical = 2,
    Io = 3,
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: Failure,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Failure, message: impl fmt::Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::new(Failure::Validation, e)
    }
}

fn synthesis_kind(e: &SynthesisError) -> Failure {
    match e.root() {
        SynthesisError::CertificationFailed(_) | SynthesisError::Linalg(_) => Failure::Numerical,
        _ => Failure::Validation,
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        CliError::new(synthesis_kind(&e), e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let kind = match &e {
            SimError::Synthesis(s) => synthesis_kind(s),
            SimError::IncompatibleKinds(_) | SimError::InvalidConfig(_) => Failure::Validation,
            SimError::Diverged { .. } | SimError::NonFinite { .. } => Failure::Numerical,
        };
        CliError::new(kind, e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(Failure::Io, e)
    }
}
