//! Command-line front end for cooperative output regulation scenarios.

pub mod builtin;
pub mod commands;
pub mod error;
pub mod verify;
