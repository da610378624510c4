//! Brute-force verification oracles. These re-solve the stage subproblems
//! at fixed parameters by mechanisms that share no optimization code with
//! the parametric explorer: exhaustive active-set enumeration with direct
//! KKT solves, and (for scalar decisions) a dense grid refined by golden
//! section. Disagreement with the synthesized solution is the primary
//! defense against self-confirming bugs.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::parametric::{ParametricProblem, PieceConstraintForm, Sense};

/// Resolution and caps for the oracle paths.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Grid points per axis for scalar decisions (at least 101).
    pub grid_points: usize,
    /// Golden-section refinement iterations after the grid pass.
    pub golden_iters: usize,
    /// Comparison tolerance for the enumeration path.
    pub tol_enumeration: f64,
    /// Comparison tolerance for the grid path.
    pub tol_grid: f64,
    /// Optimizer agreement tolerance.
    pub tol_optimizer: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid_points: 1001,
            golden_iters: 120,
            tol_enumeration: 1e-7,
            tol_grid: 1e-5,
            tol_optimizer: 1e-4,
        }
    }
}

/// Exact solve at a fixed parameter by exhaustive active-set enumeration:
/// every subset of each cell's rows up to the decision dimension, solved
/// as a raw KKT linear system and filtered by feasibility and multiplier
/// signs. Returns the optimizer and the value in the problem's sense.
pub fn oracle_solve(
    problem: &ParametricProblem,
    param: &DVector<f64>,
    cfg: &Config,
) -> Result<(DVector<f64>, f64)> {
    let d = problem.n_dec;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for (idx, cell) in problem.cells.iter().enumerate() {
        let form = PieceConstraintForm::from_cell(cell, problem.n_param, problem.n_dec);
        if !param_rows_hold(&form, param, cfg) {
            continue;
        }
        // Minimization-sign quadratic in the decision at this parameter.
        let piece = match problem.sense {
            Sense::Min => problem.pieces[idx].clone(),
            Sense::Max => problem.pieces[idx].negate(),
        };
        let (s, c, cst) = slice_quadratic(&piece, param, problem.n_param, problem.n_dec);
        let rhs = &form.n * param + &form.p;
        let r = form.num_rows();
        for subset in subsets_up_to(r, d) {
            if let Some((u, ok)) = kkt_candidate(&s, &c, &form.m, &rhs, &subset) {
                if !ok {
                    continue;
                }
                // Remaining rows feasible?
                let mut feasible = true;
                for j in 0..r {
                    if subset.contains(&j) {
                        continue;
                    }
                    if form.m.row(j).transpose().dot(&u) > rhs[j] + 1e-7 {
                        feasible = false;
                        break;
                    }
                }
                if !feasible {
                    continue;
                }
                let val = 0.5 * (&s * &u).dot(&u) + c.dot(&u) + cst;
                if best.as_ref().map_or(true, |(bv, _)| val < *bv) {
                    best = Some((val, u));
                }
            }
        }
    }
    let (val, u) =
        best.ok_or_else(|| Error::Infeasible("oracle: no feasible cell at parameter".into()))?;
    let value = match problem.sense {
        Sense::Min => val,
        Sense::Max => -val,
    };
    Ok((u, value))
}

/// Scalar-decision solve by dense grid plus golden-section refinement;
/// entirely free of KKT machinery. Only valid for `n_dec == 1`.
pub fn oracle_solve_scalar_grid(
    problem: &ParametricProblem,
    param: &DVector<f64>,
    ocfg: &OracleConfig,
    cfg: &Config,
) -> Result<(DVector<f64>, f64)> {
    if problem.n_dec != 1 {
        return Err(Error::Unsupported(
            "grid oracle requires a scalar decision".into(),
        ));
    }
    let mut best: Option<(f64, f64)> = None;
    for (idx, cell) in problem.cells.iter().enumerate() {
        let form = PieceConstraintForm::from_cell(cell, problem.n_param, 1);
        if !param_rows_hold(&form, param, cfg) {
            continue;
        }
        let rhs = &form.n * param + &form.p;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut empty = false;
        for j in 0..form.num_rows() {
            let m = form.m[(j, 0)];
            if m > 1e-12 {
                hi = hi.min(rhs[j] / m);
            } else if m < -1e-12 {
                lo = lo.max(rhs[j] / m);
            } else if rhs[j] < -1e-9 {
                empty = true;
            }
        }
        if empty || lo > hi + 1e-12 || !lo.is_finite() || !hi.is_finite() {
            continue;
        }
        let piece = match problem.sense {
            Sense::Min => problem.pieces[idx].clone(),
            Sense::Max => problem.pieces[idx].negate(),
        };
        let eval = |u: f64| -> f64 {
            let mut joint = DVector::zeros(problem.n_param + 1);
            joint.rows_mut(0, problem.n_param).copy_from(param);
            joint[problem.n_param] = u;
            piece.value(&joint)
        };
        // Grid pass.
        let n = ocfg.grid_points.max(101);
        let mut gu = lo;
        let mut gv = eval(lo);
        for k in 1..n {
            let u = lo + (hi - lo) * (k as f64) / ((n - 1) as f64);
            let v = eval(u);
            if v < gv {
                gv = v;
                gu = u;
            }
        }
        // Golden-section refinement around the grid winner.
        let h = (hi - lo) / ((n - 1) as f64);
        let (mut a, mut b) = ((gu - h).max(lo), (gu + h).min(hi));
        let phi = 0.5 * (3.0 - 5.0f64.sqrt());
        let mut c1 = a + phi * (b - a);
        let mut c2 = b - phi * (b - a);
        let (mut f1, mut f2) = (eval(c1), eval(c2));
        for _ in 0..ocfg.golden_iters {
            if f1 < f2 {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = a + phi * (b - a);
                f1 = eval(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = b - phi * (b - a);
                f2 = eval(c2);
            }
        }
        let u = 0.5 * (a + b);
        let v = eval(u);
        if best.map_or(true, |(bv, _)| v < bv) {
            best = Some((v, u));
        }
    }
    let (val, u) =
        best.ok_or_else(|| Error::Infeasible("grid oracle: no feasible cell".into()))?;
    let value = match problem.sense {
        Sense::Min => val,
        Sense::Max => -val,
    };
    Ok((DVector::from_row_slice(&[u]), value))
}

fn param_rows_hold(form: &PieceConstraintForm, param: &DVector<f64>, cfg: &Config) -> bool {
    for r in 0..form.param_a.nrows() {
        if form.param_a.row(r).transpose().dot(param) > form.param_b[r] + cfg.tol.feas {
            return false;
        }
    }
    true
}

fn slice_quadratic(
    piece: &crate::pwq::QuadraticForm,
    param: &DVector<f64>,
    n_param: usize,
    n_dec: usize,
) -> (DMatrix<f64>, DVector<f64>, f64) {
    let q = &piece.q_mat;
    let h_dd = q.view((n_param, n_param), (n_dec, n_dec)).clone_owned();
    let h_dp = q.view((n_param, 0), (n_dec, n_param)).clone_owned();
    let h_pp = q.view((0, 0), (n_param, n_param)).clone_owned();
    let h_d = piece.lin.rows(n_param, n_dec).clone_owned();
    let h_p = piece.lin.rows(0, n_param).clone_owned();
    let lin = &h_dp * param + h_d;
    let cst = 0.5 * (&h_pp * param).dot(param) + h_p.dot(param) + piece.constant;
    (h_dd, lin, cst)
}

/// All index subsets of `{0..r}` with size at most `d`, in a fixed order.
fn subsets_up_to(r: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut current: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for base in &current {
            let start = base.last().map_or(0, |&l| l + 1);
            for j in start..r {
                let mut s = base.clone();
                s.push(j);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        current = next;
    }
    out
}

/// Direct KKT solve for one active subset; returns the candidate and
/// whether the multipliers are sign-feasible.
fn kkt_candidate(
    s: &DMatrix<f64>,
    c: &DVector<f64>,
    m: &DMatrix<f64>,
    rhs: &DVector<f64>,
    subset: &[usize],
) -> Option<(DVector<f64>, bool)> {
    let d = s.nrows();
    let k = subset.len();
    let dim = d + k;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (d, d)).copy_from(s);
    for (r, &j) in subset.iter().enumerate() {
        for col in 0..d {
            kkt[(col, d + r)] = m[(j, col)];
            kkt[(d + r, col)] = m[(j, col)];
        }
    }
    let mut b = DVector::zeros(dim);
    for i in 0..d {
        b[i] = -c[i];
    }
    for (r, &j) in subset.iter().enumerate() {
        b[d + r] = rhs[j];
    }
    let sol = kkt.full_piv_lu().solve(&b)?;
    if sol.amax() > 1e12 || !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    let u = sol.rows(0, d).clone_owned();
    let lambda_ok = (0..k).all(|r| sol[d + r] >= -1e-9);
    Some((u, lambda_ok))
}

/// Empirical Lipschitz ratio of the control-slice map of a joint polytope:
/// samples pairs of joint points, measures the distance from one point's
/// decision part to the other parameter's feasible slice, relative to the
/// parameter distance. Finite output is the testable consequence.
pub fn oracle_lipschitz(
    joint: &Polytope,
    n_param: usize,
    samples: usize,
    seed: u64,
    cfg: &Config,
) -> Result<f64> {
    use crate::solver::{solve_qp, QpProblem, SolveStatus};
    let n_dec = joint.dim() - n_param;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let z1 = crate::sampling::sample_point(joint, &mut rng, &cfg.tol)?;
        let z2 = crate::sampling::sample_point(joint, &mut rng, &cfg.tol)?;
        let x1 = z1.rows(0, n_param).clone_owned();
        let u1 = z1.rows(n_param, n_dec).clone_owned();
        let x2 = z2.rows(0, n_param).clone_owned();
        let dx = (&x1 - &x2).norm();
        if dx < 1e-9 {
            continue;
        }
        let fixed: Vec<(usize, f64)> = (0..n_param).map(|i| (i, x2[i])).collect();
        let slice = joint.fix_coords(&fixed)?;
        if slice.is_empty() {
            continue;
        }
        // Projection of u1 onto the slice.
        let qp = QpProblem::new(
            DMatrix::identity(n_dec, n_dec),
            -u1.clone(),
            slice.row_matrix().clone(),
            slice.offsets().clone(),
        );
        let dist = match solve_qp(&qp, &cfg.tol)? {
            SolveStatus::Optimal(s) => (s.x - &u1).norm(),
            _ => continue,
        };
        worst = worst.max(dist / dx);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwq::QuadraticForm;
    use approx::assert_abs_diff_eq;

    fn cfg() -> Config {
        Config::default()
    }

    fn one_cell_max(piece: QuadraticForm, cell: Polytope, n_param: usize) -> ParametricProblem {
        let n_dec = cell.dim() - n_param;
        ParametricProblem {
            parent: cell.clone(),
            cells: vec![cell],
            pieces: vec![piece],
            n_param,
            n_dec,
            sense: Sense::Max,
            ambient: None,
        }
    }

    #[test]
    fn concave_bowl_peak_at_origin() {
        // max of -0.5 |w|^2 over a box containing 0: w* = 0.
        let cell = Polytope::inf_box(3, 1.0); // (z, w1, w2)
        let mut q = DMatrix::zeros(3, 3);
        q[(1, 1)] = -1.0;
        q[(2, 2)] = -1.0;
        let piece = QuadraticForm::new(q, DVector::zeros(3), 0.0).unwrap();
        let p = one_cell_max(piece, cell, 1);
        let (w, v) = oracle_solve(&p, &DVector::from_row_slice(&[0.3]), &cfg()).unwrap();
        assert!(w.amax() < 1e-9);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn boundary_maximum() {
        // max of -0.5 (w - 2)^2 over w in [-0.1, 0.1]: w* = 0.1.
        let cell = Polytope::from_rows(
            2,
            &[
                (DVector::from_row_slice(&[0.0, 1.0]), 0.1),
                (DVector::from_row_slice(&[0.0, -1.0]), 0.1),
                (DVector::from_row_slice(&[1.0, 0.0]), 1.0),
                (DVector::from_row_slice(&[-1.0, 0.0]), 1.0),
            ],
        )
        .unwrap();
        let piece = QuadraticForm::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0]),
            DVector::from_row_slice(&[0.0, 2.0]),
            -2.0,
        )
        .unwrap();
        let p = one_cell_max(piece, cell, 1);
        let (w, v) = oracle_solve(&p, &DVector::from_row_slice(&[0.0]), &cfg()).unwrap();
        assert_abs_diff_eq!(w[0], 0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(v, -0.5 * 1.9 * 1.9, epsilon = 1e-9);
        // The scalar grid path agrees.
        let (wg, vg) =
            oracle_solve_scalar_grid(&p, &DVector::zeros(1), &OracleConfig::default(), &cfg())
                .unwrap();
        assert_abs_diff_eq!(wg[0], 0.1, epsilon = 1e-6);
        assert_abs_diff_eq!(vg, v, epsilon = 1e-9);
    }

    #[test]
    fn min_oracle_box_cases() {
        // min 0.5 u^2 on |u| <= 1 -> 0; min 0.5 (u-2)^2 -> u = 1.
        let cell = Polytope::from_rows(
            2,
            &[
                (DVector::from_row_slice(&[0.0, 1.0]), 1.0),
                (DVector::from_row_slice(&[0.0, -1.0]), 1.0),
                (DVector::from_row_slice(&[1.0, 0.0]), 1.0),
                (DVector::from_row_slice(&[-1.0, 0.0]), 1.0),
            ],
        )
        .unwrap();
        let center = QuadraticForm::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            DVector::zeros(2),
            0.0,
        )
        .unwrap();
        let shifted = QuadraticForm::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            DVector::from_row_slice(&[0.0, -2.0]),
            2.0,
        )
        .unwrap();
        for (piece, u_expect, v_expect) in [(center, 0.0, 0.0), (shifted, 1.0, 0.5)] {
            let p = ParametricProblem {
                parent: cell.clone(),
                cells: vec![cell.clone()],
                pieces: vec![piece],
                n_param: 1,
                n_dec: 1,
                sense: Sense::Min,
                ambient: None,
            };
            let x = DVector::from_row_slice(&[0.2]);
            let (u, v) = oracle_solve(&p, &x, &cfg()).unwrap();
            assert_abs_diff_eq!(u[0], u_expect, epsilon = 1e-9);
            assert_abs_diff_eq!(v, v_expect, epsilon = 1e-9);
            let (ug, vg) =
                oracle_solve_scalar_grid(&p, &x, &OracleConfig::default(), &cfg()).unwrap();
            assert_abs_diff_eq!(ug[0], u_expect, epsilon = 1e-6);
            assert_abs_diff_eq!(vg, v_expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn lipschitz_constant_cases() {
        let c = cfg();
        // Box: the slice is constant, ratio 0.
        let b = Polytope::inf_box(2, 1.0);
        let k = oracle_lipschitz(&b, 1, 200, 7, &c).unwrap();
        assert!(k < 1e-9, "box ratio {k}");
        // Triangle {0 <= u <= x, 0 <= x <= 1}: ratio <= 1.
        let tri = Polytope::from_rows(
            2,
            &[
                (DVector::from_row_slice(&[-1.0, 1.0]), 0.0),
                (DVector::from_row_slice(&[0.0, -1.0]), 0.0),
                (DVector::from_row_slice(&[1.0, 0.0]), 1.0),
                (DVector::from_row_slice(&[-1.0, 0.0]), 0.0),
            ],
        )
        .unwrap();
        let k = oracle_lipschitz(&tri, 1, 400, 7, &c).unwrap();
        assert!(k <= 1.0 + 1e-9, "triangle ratio {k}");
        assert!(k > 0.5, "triangle ratio suspiciously small: {k}");
    }

    #[test]
    fn oracle_matches_parametric_on_stage_one() {
        use crate::dp::{build_max_problem, build_min_problem, stage_max};
        use crate::pwq::PwqFunction;
        let c = cfg();
        let spec = crate::testdata::example_spec();
        let terminal = crate::testdata::example_terminal(&spec);
        let vf = PwqFunction::single(
            terminal.x_f.clone(),
            QuadraticForm::from_matrix(terminal.p_f.clone()).unwrap(),
        )
        .unwrap();
        let max1 = stage_max(&spec, &vf, &terminal.x_f, &spec.x_set, &c).unwrap();
        let max_problem = build_max_problem(&spec, &vf, &terminal.x_f, &spec.x_set, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let z = crate::sampling::sample_point(&max1.domain, &mut rng, &c.tol).unwrap();
            let (w, v) = oracle_solve(&max_problem, &z, &c).unwrap();
            let v_par = max1.value.evaluate(&z, &c).unwrap();
            let w_par = max1.law.evaluate(&z, &c).unwrap();
            assert!((v - v_par).abs() < 1e-7, "value gap {}", (v - v_par).abs());
            assert!((w - w_par).amax() < 1e-4);
        }
        // Min stage cross-check through the independent scalar grid.
        let min1 = crate::dp::stage_min(&spec, &max1, &terminal.x_f, &spec.x_set, &c).unwrap();
        let min_problem = build_min_problem(&spec, &max1.value, &spec.x_set, &c).unwrap();
        for _ in 0..20 {
            let x = crate::sampling::sample_point(&min1.x_set, &mut rng, &c.tol).unwrap();
            let (u, v) = oracle_solve(&min_problem, &x, &c).unwrap();
            let (ug, vg) =
                oracle_solve_scalar_grid(&min_problem, &x, &OracleConfig::default(), &c).unwrap();
            let v_par = min1.value.evaluate(&x, &c).unwrap();
            let u_par = min1.law.evaluate(&x, &c).unwrap();
            assert!((v - v_par).abs() < 1e-7);
            assert!((u - &u_par).amax() < 1e-4);
            assert!((vg - v_par).abs() < 1e-5);
            assert!((ug - &u_par).amax() < 1e-4);
        }
    }
}
