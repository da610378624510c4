//! Terminal ingredients for receding-horizon stability: the fixed point
//! of the unconstrained min-max stage problem (a generalized discrete
//! H-infinity Riccati equation solved by value iteration), the resulting
//! control/disturbance gains, and a disturbance-invariant terminal set.

use nalgebra::{DMatrix, DVector};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::solver::qp::min_eigenvalue;

const RICCATI_TOL: f64 = 1e-11;
const RICCATI_CAP: usize = 100_000;
const DIVERGENCE_BOUND: f64 = 1e12;
const INVARIANT_CAP: usize = 500;

/// Terminal cost matrix, gains, and terminal constraint set.
#[derive(Debug, Clone)]
pub struct TerminalPair {
    pub p_f: DMatrix<f64>,
    pub k_u: DMatrix<f64>,
    pub k_w: DMatrix<f64>,
    /// `A + B K_u`.
    pub a_f: DMatrix<f64>,
    /// `A + B K_u + G K_w`.
    pub a_c: DMatrix<f64>,
    pub x_f: Polytope,
    pub gamma_used: f64,
}

/// System and cost data for the Riccati iteration.
#[derive(Debug, Clone)]
pub struct RiccatiData<'a> {
    pub a: &'a DMatrix<f64>,
    pub b: &'a DMatrix<f64>,
    pub g: &'a DMatrix<f64>,
    pub q: &'a DMatrix<f64>,
    pub r: &'a DMatrix<f64>,
    pub gamma: f64,
}

/// Gains of one exact unconstrained min-max stage step at value matrix `P`.
struct StageStep {
    p_next: DMatrix<f64>,
    k_u: DMatrix<f64>,
}

/// One dynamic-programming step: maximize over the disturbance, then
/// minimize over the control, of `l(x,u,w) + 0.5 |Ax+Bu+Gw|^2_P`.
/// Fails when `gamma^2 I - G'PG` loses positive definiteness (the inner
/// maximization becomes unbounded).
fn stage_step(d: &RiccatiData, p: &DMatrix<f64>) -> Result<StageStep> {
    let pdim = d.g.ncols();
    let delta = DMatrix::identity(pdim, pdim) * d.gamma * d.gamma - d.g.transpose() * p * d.g;
    if min_eigenvalue(&delta) <= 1e-10 {
        return Err(Error::GammaInfeasible(format!(
            "gamma^2 I - G'PG has min eigenvalue {:.3e}",
            min_eigenvalue(&delta)
        )));
    }
    let delta_inv = delta
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::GammaInfeasible("singular disturbance curvature".into()))?;
    // Value after the max step: 0.5 |v|^2_S with S = P + P G D^-1 G' P.
    let s = p + p * d.g * &delta_inv * d.g.transpose() * p;
    let s = (&s + s.transpose()) * 0.5;
    let rbb = d.r + d.b.transpose() * &s * d.b;
    let rbb_inv = rbb
        .try_inverse()
        .ok_or_else(|| Error::Input("singular control curvature".into()))?;
    let k_u = -&rbb_inv * d.b.transpose() * &s * d.a;
    let acl = d.a + d.b * &k_u;
    let p_next = d.q
        + k_u.transpose() * d.r * &k_u
        + acl.transpose() * &s * &acl;
    let p_next = (&p_next + p_next.transpose()) * 0.5;
    Ok(StageStep { p_next, k_u })
}

/// Value iteration on the unconstrained min-max stage problem from
/// `P = Q` until the iterates settle. Returns the fixed point and the
/// stage gains extracted from it.
pub fn solve_hinf_riccati(d: &RiccatiData) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = d.a.nrows();
    if d.a.ncols() != n || d.b.nrows() != n || d.g.nrows() != n {
        return Err(Error::Dimension("riccati: system matrix shapes".into()));
    }
    if min_eigenvalue(d.q) <= 0.0 || min_eigenvalue(d.r) <= 0.0 {
        return Err(Error::Input("riccati: Q and R must be positive definite".into()));
    }
    if d.gamma <= 0.0 {
        return Err(Error::Input("riccati: gamma must be positive".into()));
    }
    let mut p = d.q.clone();
    for _ in 0..RICCATI_CAP {
        let step = stage_step(d, &p)?;
        let diff = (&step.p_next - &p).norm();
        p = step.p_next;
        if p.norm() > DIVERGENCE_BOUND {
            return Err(Error::Input(
                "riccati iteration diverged; is (A,B) stabilizable?".into(),
            ));
        }
        if diff <= RICCATI_TOL {
            let fixed = stage_step(d, &p)?;
            let k_u = fixed.k_u;
            // Disturbance gain at the fixed point: the inner maximizer of
            // the stage problem as feedback on the state.
            let pdim = d.g.ncols();
            let delta =
                DMatrix::identity(pdim, pdim) * d.gamma * d.gamma - d.g.transpose() * &p * d.g;
            let delta_inv = delta
                .try_inverse()
                .ok_or_else(|| Error::GammaInfeasible("singular disturbance curvature".into()))?;
            let k_w = &delta_inv * d.g.transpose() * &p * (d.a + d.b * &k_u);
            return Ok((p, k_u, k_w));
        }
    }
    Err(Error::BudgetExhausted(
        "riccati value iteration did not converge".into(),
    ))
}

/// Stage cost `0.5 |x|^2_Q + 0.5 |u|^2_R - (gamma^2/2) |w|^2`.
pub fn stage_cost(
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    gamma: f64,
    x: &DVector<f64>,
    u: &DVector<f64>,
    w: &DVector<f64>,
) -> f64 {
    0.5 * (q * x).dot(x) + 0.5 * (r * u).dot(u) - 0.5 * gamma * gamma * w.dot(w)
}

/// Maximum stationarity residual `|V_f(A_c x) - V_f(x) + l(x, K_u x, K_w x)|`
/// over random unit states; zero at the true fixed point.
pub fn verify_fake_hjb(
    pair: &TerminalPair,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6e2);
    let n = pair.p_f.nrows();
    let vf = |x: &DVector<f64>| 0.5 * (&pair.p_f * x).dot(x);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = x.norm();
        if norm < 1e-9 {
            continue;
        }
        x /= norm;
        let u = &pair.k_u * &x;
        let w = &pair.k_w * &x;
        let xc = &pair.a_c * &x;
        let resid = vf(&xc) - vf(&x) + stage_cost(q, r, pair.gamma_used, &x, &u, &w);
        worst = worst.max(resid.abs());
    }
    worst
}

/// Spectral radius via complex eigenvalues.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Computes a disturbance-invariant terminal set for `x+ = A_f x + G w`:
/// seed with the state constraint, the control image constraint
/// `K_u x in U`, and the disturbance image constraint `K_w x in W`, then
/// iterate eroded preimages until the set stops changing.
pub fn compute_terminal_set(
    a_f: &DMatrix<f64>,
    k_u: &DMatrix<f64>,
    k_w: &DMatrix<f64>,
    g: &DMatrix<f64>,
    x: &Polytope,
    u: &Polytope,
    w: &Polytope,
    cfg: &Config,
) -> Result<Polytope> {
    let n = a_f.nrows();
    if spectral_radius(a_f) >= 1.0 - 1e-9 {
        return Err(Error::Input("terminal set: A_f not stable".into()));
    }
    // {x | K_w x in W} and {x | K_u x in U} as halfspace preimages.
    let x_tilde = w.preimage(k_w, &DVector::zeros(w.dim()))?;
    let u_pre = u.preimage(k_u, &DVector::zeros(u.dim()))?;
    let mut omega = x.intersect(&x_tilde, &cfg.tol)?.intersect(&u_pre, &cfg.tol)?;
    if omega.is_empty() {
        return Err(Error::Infeasible(
            "terminal seed set empty: disturbance set too large".into(),
        ));
    }
    let w_is_point = {
        let (_, r) = w.chebyshev();
        r < cfg.tol.interior
    };
    for _ in 0..INVARIANT_CAP {
        let eroded = if w_is_point {
            omega.clone()
        } else {
            omega.pontryagin_difference(g, w, &cfg.tol)?
        };
        if eroded.is_empty() {
            return Err(Error::Infeasible(
                "terminal set iteration emptied: disturbance set too large".into(),
            ));
        }
        let pre = eroded.preimage(a_f, &DVector::zeros(n))?;
        let next = omega.intersect(&pre, &cfg.tol)?;
        if next.is_empty() {
            return Err(Error::Infeasible(
                "terminal set iteration emptied: disturbance set too large".into(),
            ));
        }
        if next.same_set(&omega, &cfg.tol) {
            return Ok(next);
        }
        omega = next;
    }
    Err(Error::BudgetExhausted(
        "terminal set iteration did not reach a fixed point".into(),
    ))
}

/// Checks vertex-wise disturbance invariance `A_f v + G w in X_f` and the
/// image conditions `K_u v in U`, `K_w v in W` (dimension <= 4).
/// `slack` is the admitted violation: 1e-7 for sets computed here, looser
/// for externally supplied sets printed at limited precision.
pub fn verify_terminal_set(
    x_f: &Polytope,
    a_f: &DMatrix<f64>,
    k_u: &DMatrix<f64>,
    k_w: &DMatrix<f64>,
    g: &DMatrix<f64>,
    u: &Polytope,
    w: &Polytope,
    slack: f64,
    cfg: &Config,
) -> Result<()> {
    let verts = x_f.vertices(&cfg.tol)?;
    let w_verts = w.vertices(&cfg.tol)?;
    for v in &verts {
        for omega in &w_verts {
            let image = a_f * v + g * omega;
            if !x_f.contains(&image, slack) {
                return Err(Error::Certificate(format!(
                    "terminal set not disturbance invariant at vertex {v:?}"
                )));
            }
        }
        if !u.contains(&(k_u * v), slack) {
            return Err(Error::Certificate(
                "control image K_u X_f leaves U".into(),
            ));
        }
        if !w.contains(&(k_w * v), slack) {
            return Err(Error::Certificate(
                "disturbance image K_w X_f leaves W".into(),
            ));
        }
    }
    Ok(())
}

/// Full terminal synthesis: Riccati fixed point, stability checks, and a
/// verified disturbance-invariant set.
pub fn synthesize_terminal(
    d: &RiccatiData,
    x: &Polytope,
    u: &Polytope,
    w: &Polytope,
    cfg: &Config,
) -> Result<TerminalPair> {
    let (p_f, k_u, k_w) = solve_hinf_riccati(d)?;
    let a_f = d.a + d.b * &k_u;
    let a_c = &a_f + d.g * &k_w;
    if spectral_radius(&a_f) >= 1.0 - 1e-9 || spectral_radius(&a_c) >= 1.0 - 1e-9 {
        return Err(Error::Input(
            "terminal synthesis: closed-loop matrices not stable".into(),
        ));
    }
    let x_f = compute_terminal_set(&a_f, &k_u, &k_w, d.g, x, u, w, cfg)?;
    let pair = TerminalPair {
        p_f,
        k_u,
        k_w,
        a_f,
        a_c,
        x_f,
        gamma_used: d.gamma,
    };
    let resid = verify_fake_hjb(&pair, d.q, d.r);
    if resid > 1e-8 {
        return Err(Error::Certificate(format!(
            "stationarity residual {resid:.3e} exceeds 1e-8"
        )));
    }
    if pair.x_f.dim() <= 4 {
        verify_terminal_set(
            &pair.x_f, &pair.a_f, &pair.k_u, &pair.k_w, d.g, u, w, 1e-7, cfg,
        )?;
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_data() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.5, 1.0]);
        let g = DMatrix::identity(2, 2);
        let q = DMatrix::identity(2, 2) * 10.0;
        let r = DMatrix::from_row_slice(1, 1, &[1.0]);
        (a, b, g, q, r)
    }

    #[test]
    fn example_riccati_matches_printed_matrix() {
        let (a, b, g, q, r) = example_data();
        let d = RiccatiData {
            a: &a,
            b: &b,
            g: &g,
            q: &q,
            r: &r,
            gamma: 100.0,
        };
        let (p, k_u, k_w) = solve_hinf_riccati(&d).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[20.6143, 5.9244, 5.9244, 14.2329]);
        assert!(
            (&p - &expected).amax() < 5e-4,
            "P_f mismatch: {:?}",
            &p
        );
        let a_f = &a + &b * &k_u;
        let a_c = &a_f + &g * &k_w;
        assert!(spectral_radius(&a_f) < 1.0 - 1e-9);
        assert!(spectral_radius(&a_c) < 1.0 - 1e-9);
        let pair = TerminalPair {
            p_f: p,
            k_u,
            k_w,
            a_f,
            a_c,
            x_f: Polytope::inf_box(2, 1.0),
            gamma_used: 100.0,
        };
        assert!(verify_fake_hjb(&pair, &q, &r) <= 1e-8);
        // Perturbing P_f breaks stationarity measurably.
        let mut bad = pair.clone();
        bad.p_f += DMatrix::identity(2, 2) * 1e-3;
        assert!(verify_fake_hjb(&bad, &q, &r) > 1e-4);
    }

    #[test]
    fn lqr_limit_matches_dare_residual() {
        // G = 0 reduces to the standard LQR Riccati equation.
        let (a, b, _, q, r) = example_data();
        let g = DMatrix::zeros(2, 1);
        let d = RiccatiData {
            a: &a,
            b: &b,
            g: &g,
            q: &q,
            r: &r,
            gamma: 1.0,
        };
        let (p, _, _) = solve_hinf_riccati(&d).unwrap();
        // DARE residual: A'PA - P - A'PB (R + B'PB)^-1 B'PA + Q = 0.
        let rb = &r + b.transpose() * &p * &b;
        let resid = a.transpose() * &p * &a - &p
            - a.transpose() * &p * &b * rb.try_inverse().unwrap() * b.transpose() * &p * &a
            + &q;
        assert!(resid.amax() < 1e-8, "DARE residual {:.3e}", resid.amax());
    }

    #[test]
    fn non_stabilizable_rejected() {
        let a = DMatrix::from_row_slice(1, 1, &[2.0]);
        let b = DMatrix::zeros(1, 1);
        let g = DMatrix::zeros(1, 1);
        let q = DMatrix::identity(1, 1);
        let r = DMatrix::identity(1, 1);
        let d = RiccatiData {
            a: &a,
            b: &b,
            g: &g,
            q: &q,
            r: &r,
            gamma: 10.0,
        };
        assert!(solve_hinf_riccati(&d).is_err());
    }

    #[test]
    fn gamma_too_small_detected() {
        let (a, b, g, q, r) = example_data();
        let d = RiccatiData {
            a: &a,
            b: &b,
            g: &g,
            q: &q,
            r: &r,
            gamma: 1.0,
        };
        assert!(matches!(
            solve_hinf_riccati(&d),
            Err(Error::GammaInfeasible(_))
        ));
    }

    #[test]
    fn gain_monotone_in_gamma() {
        let (a, b, g, q, r) = example_data();
        let kw_norm = |gamma: f64| {
            let d = RiccatiData {
                a: &a,
                b: &b,
                g: &g,
                q: &q,
                r: &r,
                gamma,
            };
            let (_, _, k_w) = solve_hinf_riccati(&d).unwrap();
            k_w.norm()
        };
        assert!(kw_norm(1000.0) < kw_norm(100.0));
    }

    #[test]
    fn terminal_set_synthesis_on_example() {
        let cfg = Config::default();
        let (a, b, g, q, r) = example_data();
        let d = RiccatiData {
            a: &a,
            b: &b,
            g: &g,
            q: &q,
            r: &r,
            gamma: 100.0,
        };
        let x = Polytope::inf_box(2, 10.0);
        let u = Polytope::inf_box(1, 1.0);
        let w = Polytope::inf_box(2, 0.1);
        let pair = synthesize_terminal(&d, &x, &u, &w, &cfg).unwrap();
        assert!(!pair.x_f.is_empty());
        verify_terminal_set(
            &pair.x_f, &pair.a_f, &pair.k_u, &pair.k_w, &g, &u, &w, 1e-7, &cfg,
        )
        .unwrap();
        // A smaller disturbance set admits a larger invariant set.
        let w_small = Polytope::inf_box(2, 0.05);
        let x_f_small =
            compute_terminal_set(&pair.a_f, &pair.k_u, &pair.k_w, &g, &x, &u, &w_small, &cfg)
                .unwrap();
        assert!(pair.x_f.is_subset_of(&x_f_small, &cfg.tol).unwrap());
    }

    #[test]
    fn printed_terminal_set_passes_verification() {
        // The worked example's printed 4-row terminal set must itself be
        // disturbance invariant and satisfy the image conditions.
        let cfg = Config::default();
        let (a, b, g, q, r) = example_data();
        let d = RiccatiData {
            a: &a,
            b: &b,
            g: &g,
            q: &q,
            r: &r,
            gamma: 100.0,
        };
        let (_, k_u, k_w) = solve_hinf_riccati(&d).unwrap();
        let a_f = &a + &b * &k_u;
        let u = Polytope::inf_box(1, 1.0);
        let w = Polytope::inf_box(2, 0.1);
        let x_f = Polytope::from_rows(
            2,
            &[
                (DVector::from_row_slice(&[-0.9849, -0.3155]), 2.1526),
                (DVector::from_row_slice(&[0.9849, 0.3155]), 2.1526),
                (DVector::from_row_slice(&[0.4369, 0.8995]), 0.7079),
                (DVector::from_row_slice(&[-0.4369, -0.8995]), 0.7079),
            ],
        )
        .unwrap();
        // Printed at 4-5 significant digits: the offsets round upward,
        // so the image conditions hold only to printing precision.
        verify_terminal_set(&x_f, &a_f, &k_u, &k_w, &g, &u, &w, 1e-3, &cfg).unwrap();
    }
}
