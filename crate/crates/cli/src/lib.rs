//! Command implementations behind the `rudp` binary: dataset generation,
//! fitting, evaluation and the benchmark harness. The binary is a thin
//! argument-parsing layer over this crate so integration tests can drive
//! the same code paths directly.

pub mod commands;
pub mod config;
pub mod output;
