//! Simulation and numerics for random coverage: growth-process cover
//! times, Boolean-model coverage thresholds, their extreme-value limit
//! laws with all explicit constants, and Monte Carlo experiments that
//! confront the two.
//!
//! The runnable examples under `examples/` walk through each capability;
//! the `covertimes` binary exposes the same operations as subcommands.

pub mod cli;
pub mod coverage;
pub mod geom;
pub mod limits;
pub mod montecarlo;
pub mod processes;
pub mod tessellation;
