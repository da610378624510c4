//! Dense LP/QP kernels used by every other module.
//!
//! Both solvers are deliberately small: problems here have a handful of
//! variables and tens of rows, and bitwise-deterministic output matters
//! more than speed. The LP is a two-phase simplex with Bland's rule; the
//! QP is a primal active-set method started from a phase-1 LP point.

pub mod lp;
pub mod qp;

use nalgebra::DVector;

pub use lp::{solve_lp, LpProblem};
pub use qp::{solve_qp, QpProblem};

/// A successful solve with its optimality certificate.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    pub value: f64,
    /// Maximal linearly independent subset of the epsilon-active rows,
    /// chosen by column-pivoted QR when the full set is rank-deficient.
    pub active_set: Vec<usize>,
    /// Every inequality row within the activation tolerance.
    pub eps_active: Vec<usize>,
    /// One multiplier per inequality row; zero on inactive rows.
    pub ineq_multipliers: DVector<f64>,
    pub eq_multipliers: DVector<f64>,
}

/// Outcome of an LP or QP solve.
#[derive(Debug, Clone)]
pub enum SolveStatus {
    Optimal(Solution),
    Infeasible,
    Unbounded,
}

impl SolveStatus {
    /// Unwraps the optimal solution or maps the failure to an error.
    pub fn into_optimal(self, what: &str) -> crate::error::Result<Solution> {
        match self {
            SolveStatus::Optimal(s) => Ok(s),
            SolveStatus::Infeasible => Err(crate::error::Error::Infeasible(what.to_string())),
            SolveStatus::Unbounded => Err(crate::error::Error::Unbounded(what.to_string())),
        }
    }
}
