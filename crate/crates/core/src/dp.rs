//! The stage recursion: alternate parametric max (over the disturbance)
//! and min (over the control) solves, maintaining the controllability
//! sets and, in restricted mode, the invariant-coverage sets where the
//! finite-horizon solution coincides with the infinite-horizon one.

use nalgebra::{DMatrix, DVector};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{Partition, Polytope};
use crate::parametric::{explore, MarriedRegion, ParametricProblem, ParametricSolution, Sense};
use crate::pwq::{AffineLaw, PiecewiseAffineLaw, PwqFunction, QuadraticForm};
use crate::solver::qp::min_eigenvalue;
use crate::terminal::TerminalPair;

/// Which variant of the recursion runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// State and control constraints with a terminal constraint set.
    Constrained,
    /// Control constraints only; the value function is computed on a
    /// configured working window instead of the whole state space.
    ControlOnly,
    /// Control-only recursion plus the restricted-set recursion that
    /// tracks where the solution equals the infinite-horizon one.
    Restricted,
}

/// Terminal data: either supplied or synthesized.
#[derive(Debug, Clone)]
pub enum TerminalChoice {
    Given { p_f: DMatrix<f64>, x_f: Polytope },
    Compute,
}

/// Full problem statement for the synthesis pipeline.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
    pub x_set: Polytope,
    pub u_set: Polytope,
    pub w_set: Polytope,
    pub horizon: usize,
    pub terminal: TerminalChoice,
    pub mode: Mode,
    /// Working window for the control-only/restricted modes; defaults to
    /// the bounding box of the terminal set scaled by twice the horizon.
    pub bounding_box: Option<Polytope>,
}

impl ProblemSpec {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.g.ncols()
    }

    /// Structural invariants of the problem statement.
    pub fn validate(&self, cfg: &Config) -> Result<()> {
        let (n, m, p) = (self.n(), self.m(), self.p());
        if self.a.ncols() != n || self.b.nrows() != n || self.g.nrows() != n {
            return Err(Error::Dimension("system matrices".into()));
        }
        if self.q.nrows() != n || self.r.nrows() != m {
            return Err(Error::Dimension("cost weights".into()));
        }
        if min_eigenvalue(&self.q) <= 0.0 || min_eigenvalue(&self.r) <= 0.0 {
            return Err(Error::Input("Q and R must be positive definite".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::Input("gamma must be positive".into()));
        }
        if self.x_set.dim() != n || self.u_set.dim() != m || self.w_set.dim() != p {
            return Err(Error::Dimension("constraint set dimensions".into()));
        }
        let origin_n = DVector::zeros(n);
        if !self.x_set.contains(&origin_n, 0.0) || self.x_set.chebyshev().1 < cfg.tol.interior {
            return Err(Error::Input("X must contain the origin in its interior".into()));
        }
        if !self.u_set.contains(&DVector::zeros(m), 0.0)
            || self.u_set.chebyshev().1 < cfg.tol.interior
        {
            return Err(Error::Input("U must contain the origin in its interior".into()));
        }
        // W must contain the origin; a single point at the origin is the
        // nominal (disturbance-free) special case.
        if !self.w_set.contains(&DVector::zeros(p), cfg.tol.feas) {
            return Err(Error::Input("W must contain the origin".into()));
        }
        if let TerminalChoice::Given { p_f, x_f } = &self.terminal {
            if min_eigenvalue(p_f) <= 0.0 {
                return Err(Error::Input("P_f must be positive definite".into()));
            }
            if !x_f.contains(&origin_n, 0.0) || x_f.chebyshev().1 < cfg.tol.interior {
                return Err(Error::Input(
                    "X_f must contain the origin in its interior".into(),
                ));
            }
            if !x_f.is_subset_of(&self.x_set, &cfg.tol)? {
                return Err(Error::Input("X_f must be contained in X".into()));
            }
        }
        Ok(())
    }

    /// `F = [A B]`, the map from z = (x, u) to the nominal successor.
    pub fn f_matrix(&self) -> DMatrix<f64> {
        let (n, m) = (self.n(), self.m());
        let mut f = DMatrix::zeros(n, n + m);
        f.view_mut((0, 0), (n, n)).copy_from(&self.a);
        f.view_mut((0, n), (n, m)).copy_from(&self.b);
        f
    }

    /// Joint stage-cost quadratic over (x, u, w).
    pub fn stage_cost_form(&self) -> QuadraticForm {
        let (n, m, p) = (self.n(), self.m(), self.p());
        let dim = n + m + p;
        let mut q = DMatrix::zeros(dim, dim);
        q.view_mut((0, 0), (n, n)).copy_from(&self.q);
        q.view_mut((n, n), (m, m)).copy_from(&self.r);
        for j in 0..p {
            q[(n + m + j, n + m + j)] = -self.gamma * self.gamma;
        }
        QuadraticForm::new(q, DVector::zeros(dim), 0.0).expect("block diagonal is symmetric")
    }

    /// Working window used by the unconstrained-state modes.
    pub fn working_window(&self, x_f: &Polytope, cfg: &Config) -> Result<Polytope> {
        if let Some(b) = &self.bounding_box {
            return Ok(b.clone());
        }
        let (lo, hi) = x_f.bounding_box(&cfg.tol)?;
        let scale = 2.0 * self.horizon.max(1) as f64;
        Polytope::from_bounds(&(lo * scale), &(hi * scale))
    }
}

/// Output of one max half-stage.
#[derive(Debug, Clone)]
pub struct MaxStage {
    pub value: PwqFunction,
    pub law: PiecewiseAffineLaw,
    pub regions: Vec<MarriedRegion>,
    pub domain: Polytope,
    /// Largest gradient jump of the incoming value function; nonzero
    /// values mean the general-case guard relied on output validation.
    pub input_gradient_jump: f64,
}

/// Output of one min half-stage.
#[derive(Debug, Clone)]
pub struct MinStage {
    pub value: PwqFunction,
    pub law: PiecewiseAffineLaw,
    pub regions: Vec<MarriedRegion>,
    pub x_set: Polytope,
}

/// One full stage of the recursion (indexed by time-to-go).
#[derive(Debug, Clone)]
pub struct StageResult {
    pub stage: usize,
    /// Value on the stage controllability set.
    pub value: PwqFunction,
    pub control_law: PiecewiseAffineLaw,
    /// Inner maximization value on the tightened state-control set.
    pub max_value: PwqFunction,
    pub disturbance_law: PiecewiseAffineLaw,
    pub x_set: Polytope,
    pub z_set: Polytope,
    /// Restricted-mode coverage sets (a union of polytopes).
    pub x_star: Option<Vec<Polytope>>,
    pub max_regions: Vec<MarriedRegion>,
    pub min_regions: Vec<MarriedRegion>,
}

/// Inner maximization over the disturbance.
///
/// The objective `l(z,w) + V_prev(Fz + Gw)` is composed on the preimage
/// partition of the previous value function and explored in max mode over
/// the tightened state-control set `{z in ambient x U | Fz in X_prev (-) GW}`
/// (the set on which every disturbance keeps the successor inside the
/// previous controllability set). On that set the inner feasible set is
/// all of W, so the resulting value is convex in z; outside it the max
/// over the sliced disturbance set is not the recursion's objective.
pub fn stage_max(
    spec: &ProblemSpec,
    vprev: &PwqFunction,
    x_prev: &Polytope,
    ambient_x: &Polytope,
    cfg: &Config,
) -> Result<MaxStage> {
    let n = spec.n();
    // Strict concavity of the inner problem on every piece.
    let margin = vprev.concavity_margin(&spec.g, spec.gamma);
    if margin <= cfg.tol.pd {
        let worst = worst_margin_piece(vprev, &spec.g, spec.gamma);
        return Err(Error::GammaInfeasible(format!(
            "concavity margin {margin:.3e} non-positive on value piece {worst}"
        )));
    }
    // Gradient jumps in the previous value put the composed objective in
    // the piecewise max-quadratic territory where no affine-region
    // characterization is guaranteed. Creases of a convex value are convex,
    // so the concave inner maximizer is repelled from them and the region
    // machinery usually still closes; the a-posteriori validations
    // (value continuity, coverage, convexity of the produced function)
    // reject the genuinely intractable cases. The jump is reported so
    // callers can surface it.
    let c1 = vprev.check_c1(cfg)?;

    let xu = ambient_x.cartesian_product(&spec.u_set);
    let f = spec.f_matrix();
    let zero_n = DVector::zeros(n);
    let eroded = x_prev.pontryagin_difference(&spec.g, &spec.w_set, &cfg.tol)?;
    if eroded.is_empty() {
        return Err(Error::Infeasible(
            "previous controllability set erodes to nothing".into(),
        ));
    }
    let z_c = xu.intersect(&eroded.preimage(&f, &zero_n)?, &cfg.tol)?;
    if z_c.is_degenerate(&cfg.tol) {
        return Err(Error::Infeasible("tightened state-control set empty".into()));
    }

    let (w_center, w_radius) = spec.w_set.chebyshev();
    if w_radius < cfg.tol.interior {
        let mut out = point_disturbance_stage(spec, vprev, &z_c, &w_center, cfg)?;
        out.input_gradient_jump = c1.max_gradient_jump;
        return Ok(out);
    }

    let problem = assemble_max_problem(spec, vprev, &z_c, xu, cfg)?;
    let sol = explore(&problem, cfg)?;
    Ok(into_max_stage(sol, c1.max_gradient_jump))
}

/// Composed inner-maximization objective on the preimage partition over
/// the tightened set; shared between synthesis and the verification
/// oracles (which re-solve it by an independent path).
pub fn build_max_problem(
    spec: &ProblemSpec,
    vprev: &PwqFunction,
    x_prev: &Polytope,
    ambient_x: &Polytope,
    cfg: &Config,
) -> Result<ParametricProblem> {
    let n = spec.n();
    let xu = ambient_x.cartesian_product(&spec.u_set);
    let f = spec.f_matrix();
    let eroded = x_prev.pontryagin_difference(&spec.g, &spec.w_set, &cfg.tol)?;
    if eroded.is_empty() {
        return Err(Error::Infeasible(
            "previous controllability set erodes to nothing".into(),
        ));
    }
    let z_c = xu.intersect(&eroded.preimage(&f, &DVector::zeros(n))?, &cfg.tol)?;
    if z_c.is_degenerate(&cfg.tol) {
        return Err(Error::Infeasible("tightened state-control set empty".into()));
    }
    assemble_max_problem(spec, vprev, &z_c, xu, cfg)
}

fn assemble_max_problem(
    spec: &ProblemSpec,
    vprev: &PwqFunction,
    z_c: &Polytope,
    xu: Polytope,
    cfg: &Config,
) -> Result<ParametricProblem> {
    let (n, m, p) = (spec.n(), spec.m(), spec.p());
    let f = spec.f_matrix();
    let zero_n = DVector::zeros(n);
    let base = z_c.cartesian_product(&spec.w_set);
    // Map (z, w) -> successor state: T = [F G].
    let mut t = DMatrix::zeros(n, n + m + p);
    t.view_mut((0, 0), (n, n + m)).copy_from(&f);
    t.view_mut((0, n + m), (n, p)).copy_from(&spec.g);
    let ell = spec.stage_cost_form();

    let mut cells = Vec::new();
    let mut pieces = Vec::new();
    for (i, cell_x) in vprev.partition.cells.iter().enumerate() {
        let pre = cell_x.preimage(&t, &zero_n)?;
        let cell = base.intersect(&pre, &cfg.tol)?;
        if cell.is_degenerate(&cfg.tol) {
            continue;
        }
        let composed = vprev.pieces[i].compose_affine(&t, &zero_n)?;
        pieces.push(ell.add(&composed)?);
        cells.push(cell);
    }
    if cells.is_empty() {
        return Err(Error::Infeasible(
            "no state-control-disturbance cell has an interior".into(),
        ));
    }
    Ok(ParametricProblem {
        cells,
        pieces,
        parent: base,
        n_param: n + m,
        n_dec: p,
        sense: Sense::Max,
        ambient: Some(xu),
    })
}

fn into_max_stage(sol: ParametricSolution, input_gradient_jump: f64) -> MaxStage {
    MaxStage {
        value: sol.value,
        law: sol.law,
        regions: sol.regions,
        domain: sol.domain,
        input_gradient_jump,
    }
}

/// Degenerate disturbance set (a single point): the max is substitution.
/// `z_c` is the tightened state-control set from the caller.
fn point_disturbance_stage(
    spec: &ProblemSpec,
    vprev: &PwqFunction,
    z_c: &Polytope,
    w0: &DVector<f64>,
    cfg: &Config,
) -> Result<MaxStage> {
    let (n, m, p) = (spec.n(), spec.m(), spec.p());
    let f = spec.f_matrix();
    let gw = &spec.g * w0;
    let ell_zw = spec.stage_cost_form();
    // Stage cost restricted to w = w0 as a quadratic in z alone.
    let mut t_fix = DMatrix::zeros(n + m + p, n + m);
    for j in 0..n + m {
        t_fix[(j, j)] = 1.0;
    }
    let mut off = DVector::zeros(n + m + p);
    off.rows_mut(n + m, p).copy_from(w0);
    let ell_z = ell_zw.compose_affine(&t_fix, &off)?;

    let mut cells = Vec::new();
    let mut pieces = Vec::new();
    let mut laws = Vec::new();
    let mut regions = Vec::new();
    for (i, cell_x) in vprev.partition.cells.iter().enumerate() {
        let pre = cell_x.preimage(&f, &gw)?;
        let cell = z_c.intersect(&pre, &cfg.tol)?;
        if cell.is_degenerate(&cfg.tol) {
            continue;
        }
        let composed = vprev.pieces[i].compose_affine(&f, &gw)?;
        let piece = ell_z.add(&composed)?;
        laws.push(AffineLaw::new(DMatrix::zeros(p, n + m), w0.clone())?);
        regions.push(MarriedRegion {
            seed: cell.chebyshev().0,
            cells: vec![i],
            active_sets: vec![vec![]],
            region: cell.clone(),
            law: laws.last().unwrap().clone(),
            value: piece.clone(),
        });
        pieces.push(piece);
        cells.push(cell);
    }
    if cells.is_empty() {
        return Err(Error::Infeasible("empty tightened state-control set".into()));
    }
    let domain = z_c.intersect(&vprev.partition.parent.preimage(&f, &gw)?, &cfg.tol)?;
    let partition = Partition::new(cells, domain.clone());
    Ok(MaxStage {
        value: PwqFunction::new(partition.clone(), pieces)?,
        law: PiecewiseAffineLaw::new(partition, laws)?,
        regions,
        domain,
        input_gradient_jump: 0.0,
    })
}

fn worst_margin_piece(v: &PwqFunction, g: &DMatrix<f64>, gamma: f64) -> usize {
    let p = g.ncols();
    let mut worst = 0;
    let mut worst_val = f64::INFINITY;
    for (i, piece) in v.pieces.iter().enumerate() {
        let m = DMatrix::identity(p, p) * gamma * gamma - g.transpose() * &piece.q_mat * g;
        let e = min_eigenvalue(&m);
        if e < worst_val {
            worst_val = e;
            worst = i;
        }
    }
    worst
}

/// Outer minimization over the control at one stage.
///
/// In constrained mode the feasible set is tightened so the successor
/// stays in the previous controllability set for every disturbance
/// (erosion by the disturbance image); the other modes only keep the
/// control constraint and the working window.
pub fn stage_min(
    spec: &ProblemSpec,
    jprev: &MaxStage,
    x_prev: &Polytope,
    ambient_x: &Polytope,
    cfg: &Config,
) -> Result<MinStage> {
    let conv = jprev.value.check_convexity(cfg)?;
    if !conv.strictly_convex(cfg.tol.pd) {
        return Err(Error::Mode(format!(
            "inner maximization value not strictly convex (min eig {:.3e}, {} midpoint violations)",
            conv.min_eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min),
            conv.midpoint_violations
        )));
    }
    let _ = x_prev;
    let problem = build_min_problem(spec, &jprev.value, ambient_x, cfg)?;
    let sol = explore(&problem, cfg)?;
    if sol.domain.is_empty() {
        return Err(Error::Infeasible("empty controllability set".into()));
    }
    Ok(MinStage {
        x_set: sol.domain.clone(),
        value: sol.value,
        law: sol.law,
        regions: sol.regions,
    })
}

/// Outer-minimization objective: the inner value's cells restricted to
/// the ambient control set. The inner maximization already confined its
/// domain to the tightened state-control set.
pub fn build_min_problem(
    spec: &ProblemSpec,
    jprev_value: &PwqFunction,
    ambient_x: &Polytope,
    cfg: &Config,
) -> Result<ParametricProblem> {
    let (n, m) = (spec.n(), spec.m());
    let constraint = ambient_x.cartesian_product(&spec.u_set);
    let mut cells = Vec::new();
    let mut pieces = Vec::new();
    for (i, cell_z) in jprev_value.partition.cells.iter().enumerate() {
        let cell = cell_z.intersect(&constraint, &cfg.tol)?;
        if cell.is_degenerate(&cfg.tol) {
            continue;
        }
        cells.push(cell);
        pieces.push(jprev_value.pieces[i].clone());
    }
    if cells.is_empty() {
        return Err(Error::Infeasible("tightened state-control set empty".into()));
    }
    let parent = jprev_value.partition.parent.intersect(&constraint, &cfg.tol)?;
    Ok(ParametricProblem {
        cells,
        pieces,
        parent,
        n_param: n,
        n_dec: m,
        sense: Sense::Min,
        ambient: Some(ambient_x.clone()),
    })
}

/// Runs the full recursion for `spec.horizon` stages.
pub fn run_recursion(spec: &ProblemSpec, terminal: &TerminalPair, cfg: &Config) -> Result<Vec<StageResult>> {
    spec.validate(cfg)?;
    let restricted = spec.mode == Mode::Restricted;
    let ambient_x = match spec.mode {
        Mode::Constrained => spec.x_set.clone(),
        Mode::ControlOnly | Mode::Restricted => spec.working_window(&terminal.x_f, cfg)?,
    };
    let x0 = match spec.mode {
        Mode::Constrained => terminal.x_f.clone(),
        Mode::ControlOnly | Mode::Restricted => ambient_x.clone(),
    };
    let v0 = PwqFunction::single(x0.clone(), QuadraticForm::from_matrix(terminal.p_f.clone())?)?;

    let mut results = Vec::new();
    let mut vprev = v0;
    let mut x_prev = x0;
    let mut x_star_prev: Vec<Polytope> = vec![terminal.x_f.clone()];
    for j in 1..=spec.horizon {
        let max_out =
            stage_max(spec, &vprev, &x_prev, &ambient_x, cfg).map_err(|e| e.at_stage(j))?;
        let min_out =
            stage_min(spec, &max_out, &x_prev, &ambient_x, cfg).map_err(|e| e.at_stage(j))?;
        // Stage regularity: the control law must be continuous.
        let law_cont = min_out.law.continuity_violation(cfg)?;
        if law_cont > cfg.tol.cont.max(1e-5) {
            return Err(Error::Mode(format!(
                "control law discontinuous at stage {j} (violation {law_cont:.3e})"
            )));
        }
        let x_star = if restricted {
            let next = restricted_step(spec, &min_out, &x_star_prev, cfg).map_err(|e| e.at_stage(j))?;
            x_star_prev = next.clone();
            Some(next)
        } else {
            None
        };
        let z_set = max_out.domain.clone();
        x_prev = min_out.x_set.clone();
        vprev = min_out.value.clone();
        results.push(StageResult {
            stage: j,
            value: min_out.value,
            control_law: min_out.law,
            max_value: max_out.value,
            disturbance_law: max_out.law,
            x_set: min_out.x_set,
            z_set,
            x_star,
            max_regions: max_out.regions,
            min_regions: min_out.regions,
        });
    }
    Ok(results)
}

/// One step of the restricted-set recursion: per control-law cell with law
/// `Kx + k`, the states whose disturbed successors all land in a member of
/// the previous coverage set. Previous members are carried over (the
/// coverage sets are nondecreasing).
fn restricted_step(
    spec: &ProblemSpec,
    min_out: &MinStage,
    prev: &[Polytope],
    cfg: &Config,
) -> Result<Vec<Polytope>> {
    let n = spec.n();
    let mut members: Vec<Polytope> = prev.to_vec();
    let mut keys: Vec<Vec<Vec<i64>>> = members.iter().map(|p| p.canonical_key(&cfg.tol)).collect();
    let (_, w_radius) = spec.w_set.chebyshev();
    for member in prev {
        let eroded = if w_radius < cfg.tol.interior {
            member.clone()
        } else {
            member.pontryagin_difference(&spec.g, &spec.w_set, &cfg.tol)?
        };
        if eroded.is_empty() {
            continue;
        }
        for (cell, law) in min_out
            .law
            .partition
            .cells
            .iter()
            .zip(min_out.law.laws.iter())
        {
            let closed = &spec.a + &spec.b * &law.gain;
            let offset = &spec.b * &law.offset;
            let pre = eroded.preimage(&closed, &offset)?;
            let piece = cell.intersect(&pre, &cfg.tol)?;
            if piece.is_degenerate(&cfg.tol) {
                continue;
            }
            let key = piece.canonical_key(&cfg.tol);
            if !keys.contains(&key) {
                keys.push(key);
                members.push(piece);
            }
        }
    }
    let _ = n;
    Ok(members)
}

/// Output map `y = H z` with `H'H = blockdiag(Q, R)` via Cholesky.
pub fn output_matrix(q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    let m = r.nrows();
    let mut blk = DMatrix::zeros(n + m, n + m);
    blk.view_mut((0, 0), (n, n)).copy_from(q);
    blk.view_mut((n, n), (m, m)).copy_from(r);
    let chol = blk
        .cholesky()
        .ok_or_else(|| Error::Input("blockdiag(Q,R) not positive definite".into()))?;
    Ok(chol.l().transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> Config {
        Config::default()
    }

    use crate::testdata::{example_spec, example_terminal};

    #[test]
    fn point_disturbance_max_stage() {
        // W = {0}: the max is substitution, one region, law identically 0.
        let c = cfg();
        let mut spec = example_spec();
        spec.w_set = Polytope::inf_box(2, 0.0);
        let terminal = example_terminal(&spec);
        let vf = PwqFunction::single(
            terminal.x_f.clone(),
            QuadraticForm::from_matrix(terminal.p_f.clone()).unwrap(),
        )
        .unwrap();
        let out = stage_max(&spec, &vf, &terminal.x_f, &spec.x_set, &c).unwrap();
        assert_eq!(out.regions.len(), 1);
        let z = DVector::from_row_slice(&[0.1, 0.1, 0.0]);
        let nu = out.law.evaluate(&z, &c).unwrap();
        assert!(nu.amax() < 1e-12);
        // J(z) = l(z, 0) + V_f(F z).
        let f = spec.f_matrix();
        let x_next = &f * &z;
        let expected = 0.5 * 10.0 * (z[0] * z[0] + z[1] * z[1]) + 0.5 * z[2] * z[2]
            + 0.5 * (&terminal.p_f * &x_next).dot(&x_next);
        assert_abs_diff_eq!(out.value.evaluate(&z, &c).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn stage_max_stationary_at_origin() {
        // At z = 0 the adversary's optimum is 0 by symmetry.
        let c = cfg();
        let spec = example_spec();
        let terminal = example_terminal(&spec);
        let vf = PwqFunction::single(
            terminal.x_f.clone(),
            QuadraticForm::from_matrix(terminal.p_f.clone()).unwrap(),
        )
        .unwrap();
        let out = stage_max(&spec, &vf, &terminal.x_f, &spec.x_set, &c).unwrap();
        let z0 = DVector::zeros(3);
        let nu = out.law.evaluate(&z0, &c).unwrap();
        assert!(nu.amax() < 1e-9, "nu(0) = {nu:?}");
        assert!(out.value.evaluate(&z0, &c).unwrap().abs() < 1e-9);
    }

    #[test]
    fn gamma_too_small_named_piece() {
        let c = cfg();
        let mut spec = example_spec();
        spec.gamma = 1.0;
        let terminal = example_terminal(&example_spec());
        let vf = PwqFunction::single(
            terminal.x_f.clone(),
            QuadraticForm::from_matrix(terminal.p_f.clone()).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            stage_max(&spec, &vf, &terminal.x_f, &spec.x_set, &c),
            Err(Error::GammaInfeasible(_))
        ));
    }

    #[test]
    fn one_step_unconstrained_matches_closed_form() {
        // Huge U and X, W = {0}, X_f = X: the stage-1 law is the
        // unconstrained minimizer of l + V_f, affine everywhere.
        let c = cfg();
        let mut spec = example_spec();
        spec.x_set = Polytope::inf_box(2, 50.0);
        spec.u_set = Polytope::inf_box(1, 1000.0);
        spec.w_set = Polytope::inf_box(2, 0.0);
        spec.horizon = 1;
        let p_f = DMatrix::from_row_slice(2, 2, &[20.6143, 5.9244, 5.9244, 14.2329]);
        spec.terminal = TerminalChoice::Given {
            p_f: p_f.clone(),
            x_f: Polytope::inf_box(2, 50.0),
        };
        let mut terminal = example_terminal(&example_spec());
        terminal.p_f = p_f.clone();
        terminal.x_f = Polytope::inf_box(2, 50.0);
        let stages = run_recursion(&spec, &terminal, &c).unwrap();
        assert_eq!(stages.len(), 1);
        // Closed form: K = -(R + B'P B)^-1 B'P A.
        let rb = &spec.r + spec.b.transpose() * &p_f * &spec.b;
        let k = -(rb.try_inverse().unwrap()) * spec.b.transpose() * &p_f * &spec.a;
        for xv in [[0.5, -0.3], [2.0, 1.0], [-3.0, 0.7]] {
            let x = DVector::from_row_slice(&xv);
            let u = stages[0].control_law.evaluate(&x, &c).unwrap();
            let expect = &k * &x;
            assert!((u - expect).amax() < 1e-7);
        }
    }

    #[test]
    fn nominal_one_stage_count_and_descent() {
        // Stage 1 of the worked example: the law saturates, so the state
        // partition has a free region plus saturated regions.
        let c = cfg();
        let mut spec = example_spec();
        spec.horizon = 1;
        let terminal = example_terminal(&spec);
        let stages = run_recursion(&spec, &terminal, &c).unwrap();
        assert_eq!(stages.len(), 1);
        let s1 = &stages[0];
        assert!(s1.min_regions.len() >= 3, "expected saturation regions");
        // The stage value dominates the terminal cost on the terminal set
        // boundary region and matches it near the origin.
        let x = DVector::from_row_slice(&[0.2, 0.1]);
        let v1 = s1.value.evaluate(&x, &c).unwrap();
        let vf = 0.5 * (&terminal.p_f * &x).dot(&x);
        assert!((v1 - vf).abs() < 1e-6, "v1 {v1} vs vf {vf}");
    }
}
