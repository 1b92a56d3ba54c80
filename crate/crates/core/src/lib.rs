//! Gain synthesis and closed-loop simulation for cooperative output
//! regulation of heterogeneous linear multi-agent systems on directed
//! graphs.
//!
//! Followers split into informed agents, which measure the exosystem
//! output, and uninformed agents, which reconstruct the exosystem state
//! from their neighbors through adaptive observers. The crate checks the
//! solvability conditions, computes and certifies all gains, and
//! integrates the resulting closed loop.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision for typical use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agents;
pub mod graph;
pub mod linalg;
pub mod matrix;
pub mod scalar;
pub mod scenario;
pub mod sim;
pub mod synthesis;

pub use linalg::NumericPolicy;
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type GraphF64 = graph::DirectedGraph<f64>;
pub type ScenarioF64 = sim::Scenario<f64>;
pub type ScenarioF32 = sim::Scenario<f32>;
pub type GainSetF64 = synthesis::GainSet<f64>;
pub type TraceF64 = sim::Trace<f64>;
pub type PolicyF64 = linalg::NumericPolicy<f64>;
