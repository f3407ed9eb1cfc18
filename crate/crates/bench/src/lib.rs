//! Experiment runner for the gridless STAP method suite.
//!
//! Loads a config, runs seeded Monte Carlo trials of OPTIMAL, SMI, FOCUSS,
//! ANM and RAM, and writes averaged curves, heatmaps and a manifest.

pub mod compare;
pub mod config;
pub mod emit;
pub mod experiment;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("data error: {0}")]
    Data(String),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const PARTIAL: i32 = 2;
    pub const IO: i32 = 3;
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => exit::CONFIG,
            BenchError::Io(_) => exit::IO,
            BenchError::Data(_) => exit::PARTIAL,
        }
    }
}
