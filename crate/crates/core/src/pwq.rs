//! Piecewise-quadratic functions and piecewise-affine laws on polytopic
//! partitions: evaluation, gradients, and the regularity checks the
//! synthesis pipeline relies on (convexity, continuity, gradient
//! continuity, concavity margin of the disturbance subproblem).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{Partition, Polytope};
use crate::sampling::{face_points, sample_point};
use crate::solver::qp::min_eigenvalue;

/// One quadratic piece `0.5 x'Qx + q'x + s`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub q_mat: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn new(q_mat: DMatrix<f64>, lin: DVector<f64>, constant: f64) -> Result<Self> {
        if q_mat.nrows() != q_mat.ncols() || q_mat.nrows() != lin.len() {
            return Err(Error::Dimension("quadratic form shape".into()));
        }
        if (&q_mat - q_mat.transpose()).amax() > 1e-9 {
            return Err(Error::Input("quadratic form matrix not symmetric".into()));
        }
        let sym = (&q_mat + q_mat.transpose()) * 0.5;
        Ok(QuadraticForm {
            q_mat: sym,
            lin,
            constant,
        })
    }

    /// Pure quadratic `0.5 x'Px`.
    pub fn from_matrix(p: DMatrix<f64>) -> Result<Self> {
        let n = p.nrows();
        Self::new(p, DVector::zeros(n), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.q_mat * x).dot(x) + self.lin.dot(x) + self.constant
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q_mat * x + &self.lin
    }

    /// Composition with an affine map: `g(y) = f(T y + t)`.
    pub fn compose_affine(&self, t_mat: &DMatrix<f64>, t_vec: &DVector<f64>) -> Result<Self> {
        if t_mat.nrows() != self.dim() || t_vec.len() != self.dim() {
            return Err(Error::Dimension("compose_affine shape".into()));
        }
        let q = t_mat.transpose() * &self.q_mat * t_mat;
        let lin = t_mat.transpose() * (&self.q_mat * t_vec + &self.lin);
        let c = 0.5 * (&self.q_mat * t_vec).dot(t_vec) + self.lin.dot(t_vec) + self.constant;
        QuadraticForm::new((&q + q.transpose()) * 0.5, lin, c)
    }

    pub fn add(&self, other: &QuadraticForm) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("adding forms of different dims".into()));
        }
        QuadraticForm::new(
            &self.q_mat + &other.q_mat,
            &self.lin + &other.lin,
            self.constant + other.constant,
        )
    }

    pub fn negate(&self) -> Self {
        QuadraticForm {
            q_mat: -&self.q_mat,
            lin: -&self.lin,
            constant: -self.constant,
        }
    }
}

/// Affine map `x -> Kx + k`.
#[derive(Debug, Clone)]
pub struct AffineLaw {
    pub gain: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineLaw {
    pub fn new(gain: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if gain.nrows() != offset.len() {
            return Err(Error::Dimension("affine law shape".into()));
        }
        Ok(AffineLaw { gain, offset })
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.gain * x + &self.offset
    }

    pub fn in_dim(&self) -> usize {
        self.gain.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.offset.len()
    }
}

/// Canonical cell order: lexicographic by rounded Chebyshev center.
/// Ties (identical centers) break by rounded radius.
pub fn canonical_order(cells: &[Polytope]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..cells.len()).collect();
    let key = |p: &Polytope| -> Vec<i64> {
        let (c, r) = p.chebyshev();
        let mut k: Vec<i64> = c.iter().map(|x| (x / 1e-9).round() as i64).collect();
        k.push((r / 1e-9).round() as i64);
        k
    };
    let keys: Vec<Vec<i64>> = cells.iter().map(key).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    idx
}

/// A continuous piecewise-quadratic function on a polytopic partition.
#[derive(Debug, Clone)]
pub struct PwqFunction {
    pub partition: Partition,
    pub pieces: Vec<QuadraticForm>,
}

impl PwqFunction {
    /// Builds the function, sorting cells into canonical order.
    pub fn new(partition: Partition, pieces: Vec<QuadraticForm>) -> Result<Self> {
        if partition.cells.len() != pieces.len() {
            return Err(Error::Dimension("one piece per cell required".into()));
        }
        let order = canonical_order(&partition.cells);
        let cells = order.iter().map(|&i| partition.cells[i].clone()).collect();
        let pieces = order.iter().map(|&i| pieces[i].clone()).collect();
        Ok(PwqFunction {
            partition: Partition::new(cells, partition.parent),
            pieces,
        })
    }

    pub fn single(domain: Polytope, piece: QuadraticForm) -> Result<Self> {
        Self::new(Partition::new(vec![domain.clone()], domain), vec![piece])
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn dim(&self) -> usize {
        self.partition.parent.dim()
    }

    /// First cell containing `x` (canonical order), searched with the
    /// feasibility slack. Continuity makes boundary ties harmless.
    pub fn locate(&self, x: &DVector<f64>, cfg: &Config) -> Option<usize> {
        self.partition
            .cells
            .iter()
            .position(|c| c.contains(x, cfg.tol.feas))
    }

    pub fn evaluate(&self, x: &DVector<f64>, cfg: &Config) -> Result<f64> {
        let i = self
            .locate(x, cfg)
            .ok_or_else(|| Error::Domain(format!("point outside the partition: {x:?}")))?;
        Ok(self.pieces[i].value(x))
    }

    pub fn gradient(&self, x: &DVector<f64>, cfg: &Config) -> Result<DVector<f64>> {
        let i = self
            .locate(x, cfg)
            .ok_or_else(|| Error::Domain(format!("point outside the partition: {x:?}")))?;
        Ok(self.pieces[i].gradient(x))
    }

    /// Facet-adjacent cell pairs with their shared face. Lower-dimensional
    /// contacts (edges, points) are excluded: continuity there follows
    /// transitively through chains of facet neighbors, and testing at such
    /// contacts amplifies point-location error by unrelated gradients.
    pub fn adjacent_pairs(&self, cfg: &Config) -> Result<Vec<(usize, usize, Polytope)>> {
        let mut out = Vec::new();
        let cells = &self.partition.cells;
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                if let Some(face) = cells[i].shared_facet(&cells[j], &cfg.tol)? {
                    out.push((i, j, face));
                }
            }
        }
        Ok(out)
    }

    /// Value continuity across shared faces: max relative mismatch.
    pub fn continuity_violation(&self, cfg: &Config) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
        let mut worst = 0.0f64;
        for (i, j, face) in self.adjacent_pairs(cfg)? {
            for x in face_points(&face, &mut rng, cfg.budget.facet_samples, &cfg.tol)? {
                let vi = self.pieces[i].value(&x);
                let vj = self.pieces[j].value(&x);
                let rel = (vi - vj).abs() / (1.0 + vi.abs().max(vj.abs()));
                worst = worst.max(rel);
            }
        }
        Ok(worst)
    }

    /// Convexity report: per-piece smallest eigenvalue plus a midpoint
    /// convexity test on random cross-piece pairs.
    pub fn check_convexity(&self, cfg: &Config) -> Result<ConvexityReport> {
        let min_eigs: Vec<f64> = self.pieces.iter().map(|p| min_eigenvalue(&p.q_mat)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0xc04e_3713);
        let mut violations = 0usize;
        let mut checked = 0usize;
        if !self.partition.parent.is_empty() {
            for _ in 0..cfg.budget.convexity_pairs {
                let a = sample_point(&self.partition.parent, &mut rng, &cfg.tol)?;
                let b = sample_point(&self.partition.parent, &mut rng, &cfg.tol)?;
                let mid = (&a + &b) * 0.5;
                let (fa, fb, fm) = match (
                    self.locate(&a, cfg),
                    self.locate(&b, cfg),
                    self.locate(&mid, cfg),
                ) {
                    (Some(ia), Some(ib), Some(im)) => (
                        self.pieces[ia].value(&a),
                        self.pieces[ib].value(&b),
                        self.pieces[im].value(&mid),
                    ),
                    _ => continue,
                };
                checked += 1;
                if fm > 0.5 * fa + 0.5 * fb + 1e-8 {
                    violations += 1;
                }
            }
        }
        Ok(ConvexityReport {
            min_eigenvalues: min_eigs,
            midpoint_violations: violations,
            pairs_checked: checked,
        })
    }

    /// Gradient continuity across shared faces.
    pub fn check_c1(&self, cfg: &Config) -> Result<C1Report> {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc1_c1c1);
        let mut max_jump = 0.0f64;
        for (i, j, face) in self.adjacent_pairs(cfg)? {
            for x in face_points(&face, &mut rng, cfg.budget.facet_samples, &cfg.tol)? {
                let gi = self.pieces[i].gradient(&x);
                let gj = self.pieces[j].gradient(&x);
                max_jump = max_jump.max((gi - gj).norm());
            }
        }
        Ok(C1Report {
            max_gradient_jump: max_jump,
            c1_within_tol: max_jump <= 1e-5,
        })
    }

    /// Smallest eigenvalue of `gamma^2 I - G' Q_i G` over all pieces: a
    /// positive margin makes the disturbance subproblem strictly concave
    /// on every piece.
    pub fn concavity_margin(&self, g: &DMatrix<f64>, gamma: f64) -> f64 {
        let p = g.ncols();
        let mut margin = f64::INFINITY;
        for piece in &self.pieces {
            let m = DMatrix::identity(p, p) * gamma * gamma - g.transpose() * &piece.q_mat * g;
            margin = margin.min(min_eigenvalue(&m));
        }
        margin
    }
}

#[derive(Debug, Clone)]
pub struct ConvexityReport {
    pub min_eigenvalues: Vec<f64>,
    pub midpoint_violations: usize,
    pub pairs_checked: usize,
}

impl ConvexityReport {
    pub fn strictly_convex(&self, pd_tol: f64) -> bool {
        self.midpoint_violations == 0 && self.min_eigenvalues.iter().all(|&e| e > pd_tol)
    }
}

#[derive(Debug, Clone)]
pub struct C1Report {
    pub max_gradient_jump: f64,
    pub c1_within_tol: bool,
}

/// A continuous piecewise-affine law on a polytopic partition.
#[derive(Debug, Clone)]
pub struct PiecewiseAffineLaw {
    pub partition: Partition,
    pub laws: Vec<AffineLaw>,
}

impl PiecewiseAffineLaw {
    pub fn new(partition: Partition, laws: Vec<AffineLaw>) -> Result<Self> {
        if partition.cells.len() != laws.len() {
            return Err(Error::Dimension("one law per cell required".into()));
        }
        let order = canonical_order(&partition.cells);
        let cells = order.iter().map(|&i| partition.cells[i].clone()).collect();
        let laws = order.iter().map(|&i| laws[i].clone()).collect();
        Ok(PiecewiseAffineLaw {
            partition: Partition::new(cells, partition.parent),
            laws,
        })
    }

    pub fn locate(&self, x: &DVector<f64>, cfg: &Config) -> Option<usize> {
        self.partition
            .cells
            .iter()
            .position(|c| c.contains(x, cfg.tol.feas))
    }

    pub fn evaluate(&self, x: &DVector<f64>, cfg: &Config) -> Result<DVector<f64>> {
        let i = self
            .locate(x, cfg)
            .ok_or_else(|| Error::Domain(format!("point outside the law domain: {x:?}")))?;
        Ok(self.laws[i].apply(x))
    }

    /// Law continuity across shared faces; mirrors the value-function check.
    pub fn continuity_violation(&self, cfg: &Config) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1a3_5eed);
        let mut worst = 0.0f64;
        let cells = &self.partition.cells;
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                let Some(face) = cells[i].shared_facet(&cells[j], &cfg.tol)? else {
                    continue;
                };
                for x in face_points(&face, &mut rng, cfg.budget.facet_samples, &cfg.tol)? {
                    let ui = self.laws[i].apply(&x);
                    let uj = self.laws[j].apply(&x);
                    worst = worst.max((ui - uj).amax());
                }
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::solver::qp::max_eigenvalue;

    fn cfg() -> Config {
        Config::default()
    }

    /// Terminal weight printed for the worked example.
    pub fn example_pf() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[20.6143, 5.9244, 5.9244, 14.2329])
    }

    fn vf_on_box() -> PwqFunction {
        let domain = Polytope::inf_box(2, 3.0);
        let piece = QuadraticForm::from_matrix(example_pf()).unwrap();
        PwqFunction::single(domain, piece).unwrap()
    }

    #[test]
    fn evaluate_terminal_cost() {
        let c = cfg();
        let f = vf_on_box();
        let zero = DVector::zeros(2);
        assert_abs_diff_eq!(f.evaluate(&zero, &c).unwrap(), 0.0, epsilon = 1e-12);
        let e1 = DVector::from_row_slice(&[1.0, 0.0]);
        assert_abs_diff_eq!(f.evaluate(&e1, &c).unwrap(), 0.5 * 20.6143, epsilon = 1e-12);
        let g = f.gradient(&e1, &c).unwrap();
        assert_abs_diff_eq!(g[0], 20.6143, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 5.9244, epsilon = 1e-12);
        assert!(f.gradient(&zero, &c).unwrap().amax() < 1e-12);
    }

    #[test]
    fn unit_quadratic_on_unit_box() {
        let c = cfg();
        let f = PwqFunction::single(
            Polytope::inf_box(2, 1.0),
            QuadraticForm::from_matrix(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        let x = DVector::from_row_slice(&[0.5, 0.5]);
        assert_abs_diff_eq!(f.evaluate(&x, &c).unwrap(), 0.25, epsilon = 1e-12);
        assert!(matches!(
            f.evaluate(&DVector::from_row_slice(&[5.0, 0.0]), &c),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = cfg();
        let f = vf_on_box();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..100 {
            let x = crate::sampling::sample_point(&f.partition.parent, &mut rng, &c.tol).unwrap();
            // Stay clear of the boundary so the stencil remains inside.
            let x = x * 0.9;
            let g = f.gradient(&x, &c).unwrap();
            for j in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (f.evaluate(&xp, &c).unwrap() - f.evaluate(&xm, &c).unwrap()) / (2.0 * h);
                let denom = 1.0 + g[j].abs();
                assert!(
                    (fd - g[j]).abs() / denom < 1e-6,
                    "fd {fd} vs analytic {}",
                    g[j]
                );
            }
        }
    }

    #[test]
    fn convexity_flags_indefinite_piece() {
        let c = cfg();
        let good = PwqFunction::single(
            Polytope::inf_box(2, 1.0),
            QuadraticForm::from_matrix(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        let rep = good.check_convexity(&c).unwrap();
        assert!(rep.strictly_convex(1e-10));
        assert_abs_diff_eq!(rep.min_eigenvalues[0], 1.0, epsilon = 1e-12);

        let bad = PwqFunction::single(
            Polytope::inf_box(2, 1.0),
            QuadraticForm::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))
                .unwrap(),
        )
        .unwrap();
        let rep = bad.check_convexity(&c).unwrap();
        assert!(!rep.strictly_convex(1e-10));
    }

    #[test]
    fn c1_detects_kink() {
        let c = cfg();
        // |x| as two affine (zero-curvature) pieces on [-1, 1].
        let left = Polytope::from_rows(
            1,
            &[
                (DVector::from_row_slice(&[1.0]), 0.0),
                (DVector::from_row_slice(&[-1.0]), 1.0),
            ],
        )
        .unwrap();
        let right = Polytope::from_rows(
            1,
            &[
                (DVector::from_row_slice(&[-1.0]), 0.0),
                (DVector::from_row_slice(&[1.0]), 1.0),
            ],
        )
        .unwrap();
        let abs = PwqFunction::new(
            Partition::new(vec![left, right], Polytope::inf_box(1, 1.0)),
            vec![
                QuadraticForm::new(DMatrix::zeros(1, 1), DVector::from_row_slice(&[-1.0]), 0.0)
                    .unwrap(),
                QuadraticForm::new(DMatrix::zeros(1, 1), DVector::from_row_slice(&[1.0]), 0.0)
                    .unwrap(),
            ],
        )
        .unwrap();
        let rep = abs.check_c1(&c).unwrap();
        assert!(!rep.c1_within_tol);
        assert_abs_diff_eq!(rep.max_gradient_jump, 2.0, epsilon = 1e-9);
        // Value continuity still holds at the kink.
        assert!(abs.continuity_violation(&c).unwrap() < 1e-9);

        let single = vf_on_box();
        let rep = single.check_c1(&c).unwrap();
        assert!(rep.c1_within_tol);
        assert_eq!(rep.max_gradient_jump, 0.0);
    }

    #[test]
    fn concavity_margin_signs() {
        let f = vf_on_box();
        let g = DMatrix::identity(2, 2);
        // gamma = 100: margin is 100^2 - lambda_max(P_f) > 0.
        let margin = f.concavity_margin(&g, 100.0);
        let lam_max = max_eigenvalue(&example_pf());
        assert!((margin - (10_000.0 - lam_max)).abs() < 1e-9);
        assert!(lam_max > 24.0 && lam_max < 24.5);
        // gamma = 0: margin is -lambda_max(G'QG) < 0.
        assert!(f.concavity_margin(&g, 0.0) < 0.0);
        // G = 0: margin is gamma^2.
        let margin = f.concavity_margin(&DMatrix::zeros(2, 2), 3.0);
        assert_abs_diff_eq!(margin, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn law_continuity() {
        let c = cfg();
        let left = Polytope::from_rows(
            1,
            &[
                (DVector::from_row_slice(&[1.0]), 0.0),
                (DVector::from_row_slice(&[-1.0]), 1.0),
            ],
        )
        .unwrap();
        let right = Polytope::from_rows(
            1,
            &[
                (DVector::from_row_slice(&[-1.0]), 0.0),
                (DVector::from_row_slice(&[1.0]), 1.0),
            ],
        )
        .unwrap();
        // Saturation-like continuous law: -x on the left, 0 on the right.
        let law = PiecewiseAffineLaw::new(
            Partition::new(vec![left, right], Polytope::inf_box(1, 1.0)),
            vec![
                AffineLaw::new(DMatrix::from_row_slice(1, 1, &[-1.0]), DVector::zeros(1)).unwrap(),
                AffineLaw::new(DMatrix::zeros(1, 1), DVector::zeros(1)).unwrap(),
            ],
        )
        .unwrap();
        assert!(law.continuity_violation(&c).unwrap() < 1e-9);
    }
}
