//! Experiment orchestration: initial conditions, configuration, runs,
//! sweeps and output emission.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod initial;
pub mod io;
