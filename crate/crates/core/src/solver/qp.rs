//! Primal active-set method for small strictly convex quadratic programs.

use nalgebra::{DMatrix, DVector};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::solver::lp::{solve_lp, LpProblem};
use crate::solver::{Solution, SolveStatus};

/// A quadratic program `min 0.5 x'Px + q'x  s.t.  a_in x <= b_in, a_eq x = b_eq`.
/// `P` must be positive definite on the nullspace of `a_eq`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        hessian: DMatrix<f64>,
        linear: DVector<f64>,
        a_in: DMatrix<f64>,
        b_in: DVector<f64>,
    ) -> Self {
        let n = linear.len();
        QpProblem {
            hessian,
            linear,
            a_in,
            b_in,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
        }
    }

    pub fn with_equalities(mut self, a_eq: DMatrix<f64>, b_eq: DVector<f64>) -> Self {
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        self
    }

    fn check(&self, tol: &Tolerances) -> Result<()> {
        let n = self.linear.len();
        if self.hessian.nrows() != n || self.hessian.ncols() != n {
            return Err(Error::Dimension("QP: hessian shape != linear len".into()));
        }
        if (&self.hessian - self.hessian.transpose()).amax() > 1e-9 {
            return Err(Error::Input("QP: hessian not symmetric".into()));
        }
        if self.a_in.nrows() != self.b_in.len()
            || (self.a_in.nrows() > 0 && self.a_in.ncols() != n)
        {
            return Err(Error::Dimension("QP: inequality block shape".into()));
        }
        if self.a_eq.nrows() != self.b_eq.len()
            || (self.a_eq.nrows() > 0 && self.a_eq.ncols() != n)
        {
            return Err(Error::Dimension("QP: equality block shape".into()));
        }
        // Positive definiteness on the feasible subspace.
        let z = nullspace(&self.a_eq, n);
        if z.ncols() > 0 {
            let reduced = z.transpose() * &self.hessian * &z;
            let min_eig = min_eigenvalue(&reduced);
            if min_eig <= tol.pd {
                return Err(Error::Input(format!(
                    "QP: hessian not positive definite on the feasible subspace (min eig {min_eig:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// Orthonormal basis for the nullspace of `a` (identity when `a` is empty).
fn nullspace(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd with v_t");
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > 1e-10 * svd.singular_values.max().max(1.0))
        .count();
    let mut cols = Vec::new();
    for r in rank..v_t.nrows() {
        cols.push(v_t.row(r).transpose());
    }
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.max()
}

/// Greedy pivoted Gram-Schmidt selection of a maximal linearly independent
/// subset of the given rows. Ties break toward the smallest row index, so
/// the result is deterministic; indices are returned sorted.
pub fn max_independent_rows(mat: &DMatrix<f64>, rows: &[usize], tol: f64) -> Vec<usize> {
    let n = mat.ncols();
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut remaining: Vec<usize> = rows.to_vec();
    while chosen.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &r) in remaining.iter().enumerate() {
            let mut v = mat.row(r).transpose();
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
            let norm = v.norm();
            if norm > tol {
                match best {
                    None => best = Some((pos, norm)),
                    Some((_, bn)) if norm > bn + 1e-12 => best = Some((pos, norm)),
                    _ => {}
                }
            }
        }
        let Some((pos, _)) = best else { break };
        let r = remaining.remove(pos);
        let mut v = mat.row(r).transpose();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        basis.push(&v / v.norm());
        chosen.push(r);
    }
    chosen.sort_unstable();
    chosen
}

const STEP_EPS: f64 = 1e-11;
const MAX_ITERS: usize = 2_000;

/// Solves the QP by the primal active-set method. Returned multipliers
/// satisfy stationarity `Px + q + Ain' lambda + Aeq' mu = 0` to the KKT
/// tolerance, with complementary slackness.
pub fn solve_qp(p: &QpProblem, tol: &Tolerances) -> Result<SolveStatus> {
    p.check(tol)?;
    let n = p.linear.len();
    let m_in = p.a_in.nrows();
    let m_eq = p.a_eq.nrows();

    // Feasible start: phase-1 of the simplex on the same constraint set.
    let start = {
        let lp = LpProblem::new(DVector::zeros(n), p.a_in.clone(), p.b_in.clone())
            .with_equalities(p.a_eq.clone(), p.b_eq.clone());
        match solve_lp(&lp, tol)? {
            SolveStatus::Optimal(s) => s.x,
            SolveStatus::Infeasible => return Ok(SolveStatus::Infeasible),
            SolveStatus::Unbounded => unreachable!("zero-cost LP cannot be unbounded"),
        }
    };

    let mut x = start;
    // Working set: independent subset of the rows active at the start.
    let active_now: Vec<usize> = (0..m_in)
        .filter(|&i| (p.b_in[i] - p.a_in.row(i).transpose().dot(&x)).abs() <= tol.act)
        .collect();
    let mut working = max_independent_rows(&p.a_in, &active_now, 1e-9);

    let mut lambda_work: DVector<f64> = DVector::zeros(0);
    let mut mu = DVector::zeros(m_eq);
    for _ in 0..MAX_ITERS {
        // Equality-constrained subproblem on the working set.
        let k = working.len();
        let rows = m_eq + k;
        let mut a_w = DMatrix::zeros(rows, n);
        for r in 0..m_eq {
            a_w.row_mut(r).copy_from(&p.a_eq.row(r));
        }
        for (idx, &wi) in working.iter().enumerate() {
            a_w.row_mut(m_eq + idx).copy_from(&p.a_in.row(wi));
        }
        let g = &p.hessian * &x + &p.linear;
        let dim = n + rows;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
        kkt.view_mut((0, n), (n, rows)).copy_from(&a_w.transpose());
        kkt.view_mut((n, 0), (rows, n)).copy_from(&a_w);
        let mut rhs = DVector::zeros(dim);
        for j in 0..n {
            rhs[j] = -g[j];
        }
        let sol = kkt
            .full_piv_lu()
            .solve(&rhs)
            .ok_or_else(|| Error::DegenerateActiveSet("singular KKT system".into()))?;
        let d = sol.rows(0, n).clone_owned();
        let lam = sol.rows(n, rows).clone_owned();
        mu = lam.rows(0, m_eq).clone_owned();
        lambda_work = lam.rows(m_eq, k).clone_owned();

        if d.amax() <= STEP_EPS * (1.0 + x.amax()) {
            // Stationary on the working set: check inequality multipliers.
            let mut drop = None;
            for (idx, &wi) in working.iter().enumerate() {
                if lambda_work[idx] < -1e-9 {
                    drop = Some((idx, wi));
                    break; // smallest working-set position
                }
            }
            match drop {
                Some((idx, _)) => {
                    working.remove(idx);
                    continue;
                }
                None => break, // optimal
            }
        }

        // Step to the nearest blocking constraint.
        let mut alpha = 1.0f64;
        let mut blocker = None;
        for i in 0..m_in {
            if working.contains(&i) {
                continue;
            }
            let denom = p.a_in.row(i).transpose().dot(&d);
            if denom > 1e-12 {
                let slack = (p.b_in[i] - p.a_in.row(i).transpose().dot(&x)).max(0.0);
                let ratio = slack / denom;
                if ratio < alpha - 1e-14 {
                    alpha = ratio;
                    blocker = Some(i);
                }
            }
        }
        x += &d * alpha;
        if let Some(b) = blocker {
            working.push(b);
            working.sort_unstable();
        }
        if blocker.is_none() {
            // Full step with no blocker: the EQP optimum is feasible;
            // loop once more to examine multipliers.
            continue;
        }
    }

    // Assemble the certificate.
    let mut lambda = DVector::zeros(m_in);
    for (idx, &wi) in working.iter().enumerate() {
        lambda[wi] = lambda_work[idx].max(0.0);
    }
    let value = 0.5 * (&p.hessian * &x).dot(&x) + p.linear.dot(&x);
    let eps_active: Vec<usize> = (0..m_in)
        .filter(|&i| (p.b_in[i] - p.a_in.row(i).transpose().dot(&x)).abs() <= tol.act)
        .collect();
    let active_set = max_independent_rows(&p.a_in, &eps_active, 1e-9);

    // KKT residual guard.
    let resid = &p.hessian * &x
        + &p.linear
        + p.a_in.transpose() * &lambda
        + p.a_eq.transpose() * &mu;
    if resid.amax() > tol.kkt * (1.0 + x.amax()).max(1.0) * 100.0 {
        return Err(Error::Input(format!(
            "QP: stationarity residual {:.3e} exceeds tolerance",
            resid.amax()
        )));
    }

    Ok(SolveStatus::Optimal(Solution {
        x,
        value,
        active_set,
        eps_active,
        ineq_multipliers: lambda,
        eq_multipliers: mu,
    }))
}
