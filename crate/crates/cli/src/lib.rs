//! Batch front-end for the quantization library.

pub mod commands;
pub mod config;

pub use config::{GeneratorSpec, RunConfig, StateSpec, Tolerances};
