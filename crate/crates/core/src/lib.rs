//! Explicit solution of finite-horizon constrained min-max optimal control
//! for linear discrete-time systems with quadratic cost and a negatively
//! costed, bounded disturbance.
//!
//! The pipeline alternates parametric max (over the disturbance) and min
//! (over the control) solves of piecewise-quadratic objectives, producing
//! piecewise-quadratic value functions and piecewise-affine laws on
//! explicit polytopic partitions, together with terminal-set synthesis,
//! closed-loop simulation, and brute-force verification oracles.

pub mod artifacts;
pub mod checks;
pub mod config;
pub mod dp;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod parametric;
pub mod pwq;
pub mod sampling;
pub mod rhc;
pub mod solver;
pub mod specfile;
pub mod terminal;

#[cfg(test)]
pub mod testdata;

pub use config::{Budgets, Config, Tolerances};
pub use error::{Error, Result};
