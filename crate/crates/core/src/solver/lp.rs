//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min c'x  s.t.  Ain x <= bin, Aeq x = beq` with free variables.
//! Bland's rule is used for both entering and leaving choices, which makes
//! the pivot sequence deterministic and cycle-free. Problem sizes here are
//! tiny (tens of rows), so a full tableau is kept.

use nalgebra::{DMatrix, DVector};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::solver::{Solution, SolveStatus};

/// A linear program `min c'x  s.t.  a_in x <= b_in, a_eq x = b_eq`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub cost: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

impl LpProblem {
    pub fn new(cost: DVector<f64>, a_in: DMatrix<f64>, b_in: DVector<f64>) -> Self {
        let n = cost.len();
        LpProblem {
            cost,
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

    fn check_dims(&self) -> Result<()> {
        let n = self.cost.len();
        if self.a_in.ncols() != n && self.a_in.nrows() > 0 {
            return Err(Error::Dimension(format!(
                "LP: Ain has {} cols, cost has {}",
                self.a_in.ncols(),
                n
            )));
        }
        if self.a_in.nrows() != self.b_in.len() {
            return Err(Error::Dimension("LP: Ain rows != bin len".into()));
        }
        if self.a_eq.nrows() > 0 && self.a_eq.ncols() != n {
            return Err(Error::Dimension("LP: Aeq cols != cost len".into()));
        }
        if self.a_eq.nrows() != self.b_eq.len() {
            return Err(Error::Dimension("LP: Aeq rows != beq len".into()));
        }
        Ok(())
    }
}

const PIVOT_EPS: f64 = 1e-10;
const COST_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 20_000;

/// Tableau-based simplex state over the standard form
/// `min c~'v  s.t.  T v = rhs, v >= 0`.
struct Tableau {
    /// rows x (cols + 1); last column is the rhs.
    t: DMatrix<f64>,
    basis: Vec<usize>,
    n_cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[(r, self.n_cols)]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[(row, col)];
        let ncols = self.n_cols + 1;
        for j in 0..ncols {
            self.t[(row, j)] /= piv;
        }
        for r in 0..self.t.nrows() {
            if r == row {
                continue;
            }
            let factor = self.t[(r, col)];
            if factor.abs() > 0.0 {
                for j in 0..ncols {
                    let v = self.t[(row, j)];
                    self.t[(r, j)] -= factor * v;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations for the given cost vector using Bland's rule.
    /// `allowed` masks columns that may enter the basis.
    /// Returns Ok(true) on optimality, Ok(false) on unboundedness.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            // Reduced costs: c_j - c_B' B^-1 A_j. The tableau already stores
            // B^-1 A, so price out with the basic costs.
            let mut entering = None;
            for j in 0..self.n_cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut red = cost[j];
                for (r, &b) in self.basis.iter().enumerate() {
                    red -= cost[b] * self.t[(r, j)];
                }
                if red < -COST_EPS {
                    entering = Some(j);
                    break; // Bland: first improving index
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };
            // Ratio test; ties broken by smallest basis variable index.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.t.nrows() {
                let a = self.t[(r, col)];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - PIVOT_EPS
                                || (ratio < bratio + PIVOT_EPS
                                    && self.basis[r] < self.basis[br])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col);
        }
        Err(Error::BudgetExhausted("simplex pivot cap reached".into()))
    }
}

/// Solves the LP. On `Optimal` the returned multipliers satisfy
/// `c + Ain' lambda + Aeq' mu = 0` with `lambda >= 0`.
pub fn solve_lp(p: &LpProblem, tol: &Tolerances) -> Result<SolveStatus> {
    p.check_dims()?;
    let n = p.cost.len();
    let m_in = p.a_in.nrows();
    let m_eq = p.a_eq.nrows();
    let m = m_in + m_eq;

    if m == 0 {
        // No constraints: optimal iff c = 0, else unbounded.
        if p.cost.amax() <= COST_EPS {
            return Ok(SolveStatus::Optimal(Solution {
                x: DVector::zeros(n),
                value: 0.0,
                active_set: vec![],
                eps_active: vec![],
                ineq_multipliers: DVector::zeros(0),
                eq_multipliers: DVector::zeros(0),
            }));
        }
        return Ok(SolveStatus::Unbounded);
    }

    // Standard form columns: [x+ (n) | x- (n) | slack (m_in) | artificial (m)].
    let n_struct = 2 * n + m_in;
    let n_total = n_struct + m;
    let mut t = DMatrix::zeros(m, n_total + 1);
    let mut flip = vec![1.0f64; m];

    for r in 0..m {
        let (row, rhs) = if r < m_in {
            (p.a_in.row(r).clone_owned(), p.b_in[r])
        } else {
            (p.a_eq.row(r - m_in).clone_owned(), p.b_eq[r - m_in])
        };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        flip[r] = sign;
        for j in 0..n {
            t[(r, j)] = sign * row[j];
            t[(r, n + j)] = -sign * row[j];
        }
        if r < m_in {
            t[(r, 2 * n + r)] = sign;
        }
        t[(r, n_struct + r)] = 1.0;
        t[(r, n_total)] = sign * rhs;
    }

    let mut tab = Tableau {
        t,
        basis: (n_struct..n_total).collect(),
        n_cols: n_total,
    };

    // Phase 1: minimize the artificial sum.
    let mut phase1_cost = vec![0.0; n_total];
    for c in phase1_cost.iter_mut().skip(n_struct) {
        *c = 1.0;
    }
    let allowed_all = vec![true; n_total];
    if !tab.optimize(&phase1_cost, &allowed_all)? {
        return Err(Error::Unbounded("phase-1 LP unbounded".into()));
    }
    let phase1_value: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= n_struct)
        .map(|(r, _)| tab.rhs(r))
        .sum();
    if phase1_value > tol.feas {
        return Ok(SolveStatus::Infeasible);
    }

    // Drive remaining artificials out of the basis where possible; a row
    // with no structural pivot is redundant and its artificial stays basic
    // at zero (blocked from re-entering in phase 2).
    for r in 0..m {
        if tab.basis[r] >= n_struct {
            let col = (0..n_struct).find(|&j| tab.t[(r, j)].abs() > 1e-8);
            if let Some(col) = col {
                tab.pivot(r, col);
            }
        }
    }

    // Phase 2 over structural columns only.
    let mut cost = vec![0.0; n_total];
    for j in 0..n {
        cost[j] = p.cost[j];
        cost[n + j] = -p.cost[j];
    }
    let mut allowed = vec![true; n_total];
    for a in allowed.iter_mut().skip(n_struct) {
        *a = false;
    }
    if !tab.optimize(&cost, &allowed)? {
        return Ok(SolveStatus::Unbounded);
    }

    // Recover the primal point.
    let mut v = vec![0.0; n_total];
    for (r, &b) in tab.basis.iter().enumerate() {
        v[b] = tab.rhs(r);
    }
    let x = DVector::from_fn(n, |j, _| v[j] - v[n + j]);
    let value = p.cost.dot(&x);

    // Row prices y' = c_B' B^-1 read off the artificial columns, whose
    // tableau block is exactly B^-1 (scaled by the row flips applied above).
    let mut y = vec![0.0; m];
    for (i, yi) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (r, &b) in tab.basis.iter().enumerate() {
            acc += cost[b] * tab.t[(r, n_struct + i)];
        }
        *yi = acc * flip[i];
    }
    let mut lambda = DVector::from_fn(m_in, |i, _| -y[i]);
    let mu = DVector::from_fn(m_eq, |i, _| -y[m_in + i]);
    for l in lambda.iter_mut() {
        if *l < 0.0 && *l > -1e-7 {
            *l = 0.0;
        }
    }

    let mut eps_active = Vec::new();
    for i in 0..m_in {
        let slack = p.b_in[i] - p.a_in.row(i).transpose().dot(&x);
        if slack.abs() <= tol.act {
            eps_active.push(i);
        }
    }

    Ok(SolveStatus::Optimal(Solution {
        x,
        value,
        active_set: eps_active.clone(),
        eps_active,
        ineq_multipliers: lambda,
        eq_multipliers: mu,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn box_minimum() {
        // min x s.t. 0 <= x <= 1 -> x = 0.
        let p = LpProblem::new(
            DVector::from_row_slice(&[1.0]),
            mat(2, 1, &[1.0, -1.0]),
            DVector::from_row_slice(&[1.0, 0.0]),
        );
        match solve_lp(&p, &tol()).unwrap() {
            SolveStatus::Optimal(s) => {
                assert_abs_diff_eq!(s.x[0], 0.0, epsilon = 1e-9);
                assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn single_active_bound() {
        // min -x s.t. x <= 1 -> x = 1, value -1 (bounded by the single row).
        let p = LpProblem::new(
            DVector::from_row_slice(&[-1.0]),
            mat(1, 1, &[1.0]),
            DVector::from_row_slice(&[1.0]),
        );
        match solve_lp(&p, &tol()).unwrap() {
            SolveStatus::Optimal(s) => {
                assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-9);
                assert_abs_diff_eq!(s.value, -1.0, epsilon = 1e-9);
                assert_eq!(s.eps_active, vec![0]);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn contradictory_bounds_infeasible() {
        // {x <= -1, x >= 1} is empty.
        let p = LpProblem::new(
            DVector::from_row_slice(&[0.0]),
            mat(2, 1, &[1.0, -1.0]),
            DVector::from_row_slice(&[-1.0, -1.0]),
        );
        assert!(matches!(
            solve_lp(&p, &tol()).unwrap(),
            SolveStatus::Infeasible
        ));
    }

    #[test]
    fn unbounded_detected() {
        // min -x s.t. x >= 0.
        let p = LpProblem::new(
            DVector::from_row_slice(&[-1.0]),
            mat(1, 1, &[-1.0]),
            DVector::from_row_slice(&[0.0]),
        );
        assert!(matches!(
            solve_lp(&p, &tol()).unwrap(),
            SolveStatus::Unbounded
        ));
    }

    #[test]
    fn equality_constrained() {
        // min x1 + x2 s.t. x1 + x2 = 1, x >= 0 componentwise.
        let p = LpProblem::new(
            DVector::from_row_slice(&[1.0, 1.0]),
            mat(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            DVector::from_row_slice(&[0.0, 0.0]),
        )
        .with_equalities(mat(1, 2, &[1.0, 1.0]), DVector::from_row_slice(&[1.0]));
        match solve_lp(&p, &tol()).unwrap() {
            SolveStatus::Optimal(s) => {
                assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn duality_on_random_boxes() {
        // Primal value equals the dual value assembled from multipliers.
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..4usize);
            let cost = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            // Random box plus a couple of random cuts through it.
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                rows.extend_from_slice(&e);
                rhs.push(rng.gen_range(0.5..3.0));
                e[j] = -1.0;
                rows.extend_from_slice(&e);
                rhs.push(rng.gen_range(0.5..3.0));
            }
            for _ in 0..2 {
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                rows.extend_from_slice(&a);
                rhs.push(rng.gen_range(0.5..2.0));
            }
            let m = rhs.len();
            let p = LpProblem::new(
                cost.clone(),
                DMatrix::from_row_slice(m, n, &rows),
                DVector::from_row_slice(&rhs),
            );
            if let SolveStatus::Optimal(s) = solve_lp(&p, &tol()).unwrap() {
                // Stationarity: c + Ain' lambda = 0.
                let resid = &cost + p.a_in.transpose() * &s.ineq_multipliers;
                assert!(resid.amax() < 1e-7, "stationarity residual {}", resid.amax());
                // Dual value -b' lambda equals primal value.
                let dual = -p.b_in.dot(&s.ineq_multipliers);
                assert_abs_diff_eq!(dual, s.value, epsilon = 1e-7);
                assert!(s.ineq_multipliers.min() >= 0.0);
            } else {
                panic!("box LP must be feasible and bounded");
            }
        }
    }

    #[test]
    fn deterministic_output() {
        let p = LpProblem::new(
            DVector::from_row_slice(&[1.0, -0.5]),
            mat(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            DVector::from_row_slice(&[1.0, 1.0, 1.0, 1.0]),
        );
        let a = solve_lp(&p, &tol()).unwrap();
        let b = solve_lp(&p, &tol()).unwrap();
        match (a, b) {
            (SolveStatus::Optimal(sa), SolveStatus::Optimal(sb)) => {
                assert_eq!(sa.x.as_slice(), sb.x.as_slice());
                assert_eq!(
                    sa.ineq_multipliers.as_slice(),
                    sb.ineq_multipliers.as_slice()
                );
            }
            _ => panic!("expected optimal"),
        }
    }
}
