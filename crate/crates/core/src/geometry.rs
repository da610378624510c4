//! Polytope algebra in halfspace representation.
//!
//! Every set in the pipeline (state/control/disturbance constraints,
//! controllability sets, critical regions, partition cells) is a polytope
//! `{x | Hx <= h}` with unit-normalized rows. Vertex enumeration is a
//! derived, dimension-limited view used only by low-dimensional oracles
//! and invariance checks.

use nalgebra::{DMatrix, DVector};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::solver::{solve_lp, LpProblem, SolveStatus};

/// Guard magnitude for the Chebyshev LP so it stays bounded even on
/// unbounded intermediate sets; all data here lives well inside it.
const CHEB_GUARD: f64 = 1e9;

/// One inequality `normal' x <= offset` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Normalizes `a'x <= b` by the Euclidean norm of `a`.
    /// Rows with a (near-)zero normal are rejected. Rows already within
    /// 1e-12 of unit norm are kept bitwise, so serialized descriptions
    /// round-trip exactly.
    pub fn new(normal: DVector<f64>, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if n < 1e-12 {
            return Err(Error::Input("halfspace with zero normal".into()));
        }
        if (n - 1.0).abs() <= 1e-12 {
            return Ok(Halfspace { normal, offset });
        }
        Ok(Halfspace {
            normal: normal / n,
            offset: offset / n,
        })
    }
}

/// A polytope `{x | Hx <= h}` with cached emptiness and Chebyshev data.
#[derive(Debug, Clone)]
pub struct Polytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
    dim: usize,
    empty: bool,
    cheb_center: DVector<f64>,
    cheb_radius: f64,
}

impl Polytope {
    /// Builds a polytope from raw rows `a_i' x <= b_i`, normalizing each.
    /// Rows with zero normals are accepted only when trivially satisfied
    /// (`0 <= b`); a violated zero row yields the canonical empty set.
    pub fn from_rows(dim: usize, rows: &[(DVector<f64>, f64)]) -> Result<Self> {
        let mut hs = Vec::with_capacity(rows.len());
        let mut forced_empty = false;
        for (a, b) in rows {
            if a.len() != dim {
                return Err(Error::Dimension(format!(
                    "halfspace dim {} != polytope dim {}",
                    a.len(),
                    dim
                )));
            }
            if a.norm() < 1e-12 {
                if *b < -1e-12 {
                    forced_empty = true;
                }
                continue;
            }
            hs.push(Halfspace::new(a.clone(), *b)?);
        }
        if forced_empty {
            return Ok(Self::empty_set(dim));
        }
        Ok(Self::from_halfspaces(dim, hs))
    }

    /// Builds from already-normalized halfspaces and computes the cache.
    pub fn from_halfspaces(dim: usize, hs: Vec<Halfspace>) -> Self {
        let m = hs.len();
        let mut a = DMatrix::zeros(m, dim);
        let mut b = DVector::zeros(m);
        for (i, h) in hs.iter().enumerate() {
            a.row_mut(i).copy_from(&h.normal.transpose());
            b[i] = h.offset;
        }
        let (empty, center, radius) = chebyshev_data(&a, &b, dim);
        Polytope {
            a,
            b,
            dim,
            empty,
            cheb_center: center,
            cheb_radius: radius,
        }
    }

    /// The canonical empty set in the given dimension.
    pub fn empty_set(dim: usize) -> Self {
        let mut e = DVector::zeros(dim);
        e[0] = 1.0;
        let hs = vec![
            Halfspace::new(e.clone(), -1.0).unwrap(),
            Halfspace::new(-e, -1.0).unwrap(),
        ];
        Self::from_halfspaces(dim, hs)
    }

    /// The box `{x | |x|_inf <= r}`.
    pub fn inf_box(dim: usize, r: f64) -> Self {
        let mut rows = Vec::new();
        for j in 0..dim {
            let mut e = DVector::zeros(dim);
            e[j] = 1.0;
            rows.push((e.clone(), r));
            rows.push((-e, r));
        }
        Self::from_rows(dim, &rows).unwrap()
    }

    /// Axis-aligned box with per-coordinate bounds `lo <= x <= hi`.
    pub fn from_bounds(lo: &DVector<f64>, hi: &DVector<f64>) -> Result<Self> {
        let dim = lo.len();
        if hi.len() != dim {
            return Err(Error::Dimension("box bounds length mismatch".into()));
        }
        let mut rows = Vec::new();
        for j in 0..dim {
            let mut e = DVector::zeros(dim);
            e[j] = 1.0;
            rows.push((e.clone(), hi[j]));
            rows.push((-e, -lo[j]));
        }
        Self::from_rows(dim, &rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn row_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn halfspace(&self, i: usize) -> Halfspace {
        Halfspace {
            normal: self.a.row(i).transpose(),
            offset: self.b[i],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Chebyshev center and radius (radius < 0 means empty).
    pub fn chebyshev(&self) -> (DVector<f64>, f64) {
        (self.cheb_center.clone(), self.cheb_radius)
    }

    /// A polytope with Chebyshev radius below the interior tolerance has no
    /// usable interior and is discarded from partitions.
    pub fn is_degenerate(&self, tol: &Tolerances) -> bool {
        self.empty || self.cheb_radius < tol.interior
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim {
            return false;
        }
        for i in 0..self.a.nrows() {
            if self.a.row(i).transpose().dot(x) > self.b[i] + tol {
                return false;
            }
        }
        true
    }

    /// `max { dir'x | x in self }` via LP.
    pub fn support(&self, dir: &DVector<f64>, tol: &Tolerances) -> Result<f64> {
        if dir.len() != self.dim {
            return Err(Error::Dimension("support direction dim".into()));
        }
        let lp = LpProblem::new(-dir.clone(), self.a.clone(), self.b.clone());
        match solve_lp(&lp, tol)? {
            SolveStatus::Optimal(s) => Ok(-s.value),
            SolveStatus::Infeasible => Err(Error::Infeasible("support of empty set".into())),
            SolveStatus::Unbounded => Err(Error::Unbounded(
                "support direction unbounded over polyhedron".into(),
            )),
        }
    }

    /// Maximizer of `dir'x` over the set.
    pub fn support_point(&self, dir: &DVector<f64>, tol: &Tolerances) -> Result<DVector<f64>> {
        let lp = LpProblem::new(-dir.clone(), self.a.clone(), self.b.clone());
        match solve_lp(&lp, tol)? {
            SolveStatus::Optimal(s) => Ok(s.x),
            SolveStatus::Infeasible => Err(Error::Infeasible("support of empty set".into())),
            SolveStatus::Unbounded => Err(Error::Unbounded("unbounded support".into())),
        }
    }

    /// True when the support is finite along +/- every coordinate axis.
    pub fn is_bounded(&self, tol: &Tolerances) -> bool {
        if self.empty {
            return true;
        }
        for j in 0..self.dim {
            let mut e = DVector::zeros(self.dim);
            e[j] = 1.0;
            if self.support(&e, tol).is_err() {
                return false;
            }
            e[j] = -1.0;
            if self.support(&e, tol).is_err() {
                return false;
            }
        }
        true
    }

    /// Tight axis-aligned bounding box.
    pub fn bounding_box(&self, tol: &Tolerances) -> Result<(DVector<f64>, DVector<f64>)> {
        let mut lo = DVector::zeros(self.dim);
        let mut hi = DVector::zeros(self.dim);
        for j in 0..self.dim {
            let mut e = DVector::zeros(self.dim);
            e[j] = 1.0;
            hi[j] = self.support(&e, tol)?;
            e[j] = -1.0;
            lo[j] = -self.support(&e, tol)?;
        }
        Ok((lo, hi))
    }

    /// Halfspace concatenation followed by redundancy removal.
    pub fn intersect(&self, other: &Polytope, tol: &Tolerances) -> Result<Polytope> {
        if self.dim != other.dim {
            return Err(Error::Dimension("intersect: dimension mismatch".into()));
        }
        let mut rows = Vec::new();
        for i in 0..self.a.nrows() {
            rows.push((self.a.row(i).transpose(), self.b[i]));
        }
        for i in 0..other.a.nrows() {
            rows.push((other.a.row(i).transpose(), other.b[i]));
        }
        let raw = Polytope::from_rows(self.dim, &rows)?;
        Ok(raw.remove_redundancy(tol))
    }

    /// Pontryagin erosion `self (-) G w`: every row offset shrinks by the
    /// support of `w` in the direction `G' a`. The result is exactly
    /// `{v | v + G omega in self  for all omega in w}`; it may be empty.
    pub fn pontryagin_difference(
        &self,
        g: &DMatrix<f64>,
        w: &Polytope,
        tol: &Tolerances,
    ) -> Result<Polytope> {
        if g.nrows() != self.dim || g.ncols() != w.dim {
            return Err(Error::Dimension("pontryagin: G shape mismatch".into()));
        }
        if w.is_empty() {
            return Err(Error::Input("pontryagin: disturbance set empty".into()));
        }
        let mut rows = Vec::new();
        for i in 0..self.a.nrows() {
            let a = self.a.row(i).transpose();
            let dir = g.transpose() * &a;
            let shrink = w.support(&dir, tol)?;
            rows.push((a, self.b[i] - shrink));
        }
        let raw = Polytope::from_rows(self.dim, &rows)?;
        Ok(raw.remove_redundancy(tol))
    }

    /// Fourier-Motzkin projection onto the coordinates in `keep`
    /// (strictly increasing indices), pruning after each elimination.
    pub fn project(&self, keep: &[usize], tol: &Tolerances) -> Result<Polytope> {
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= self.dim) {
            return Err(Error::Input("project: keep must be sorted, in range".into()));
        }
        let mut coords: Vec<usize> = (0..self.dim).collect();
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        // Eliminate non-kept coordinates from the highest original index down.
        let mut elim: Vec<usize> = (0..self.dim).filter(|i| !keep.contains(i)).collect();
        elim.sort_unstable_by(|x, y| y.cmp(x));
        for orig in elim {
            let col = coords.iter().position(|&c| c == orig).unwrap();
            let (na, nb) = fm_eliminate(&a, &b, col);
            coords.remove(col);
            let pruned = Polytope::from_rows(coords.len(), &rows_of(&na, &nb))?
                .remove_redundancy(tol);
            a = pruned.a;
            b = pruned.b;
        }
        Polytope::from_rows(keep.len(), &rows_of(&a, &b))
    }

    /// Drops every row that is implied by the others (LP necessity test)
    /// after merging duplicate rows. Empty sets pass through unchanged.
    pub fn remove_redundancy(&self, tol: &Tolerances) -> Polytope {
        if self.empty {
            return self.clone();
        }
        // Merge duplicates: equal normals keep the smallest offset.
        let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
        'outer: for i in 0..self.a.nrows() {
            let ai = self.a.row(i).transpose();
            for (aj, bj) in rows.iter_mut() {
                if (&ai - &*aj).amax() <= 1e-9 {
                    if self.b[i] < *bj {
                        *bj = self.b[i];
                    }
                    continue 'outer;
                }
            }
            rows.push((ai, self.b[i]));
        }
        // Sequential necessity filter.
        let mut keep: Vec<bool> = vec![true; rows.len()];
        for i in 0..rows.len() {
            let others: Vec<(DVector<f64>, f64)> = rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i && keep[*j])
                .map(|(_, r)| r.clone())
                .collect();
            if others.is_empty() {
                continue;
            }
            let m = others.len();
            let mut oa = DMatrix::zeros(m, self.dim);
            let mut ob = DVector::zeros(m);
            for (r, (a, b)) in others.iter().enumerate() {
                oa.row_mut(r).copy_from(&a.transpose());
                ob[r] = *b;
            }
            let lp = LpProblem::new(-rows[i].0.clone(), oa, ob);
            match solve_lp(&lp, tol) {
                Ok(SolveStatus::Optimal(s)) => {
                    if -s.value <= rows[i].1 + tol.redundancy {
                        keep[i] = false;
                    }
                }
                // Unbounded in this direction: the row is necessary.
                _ => {}
            }
        }
        let kept: Vec<(DVector<f64>, f64)> = rows
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(r, _)| r)
            .collect();
        Polytope::from_rows(self.dim, &kept).expect("rows already normalized")
    }

    /// Vertex enumeration by facet combinations; supported for dim <= 4.
    pub fn vertices(&self, _tol: &Tolerances) -> Result<Vec<DVector<f64>>> {
        if self.dim > 4 {
            return Err(Error::Unsupported(
                "vertex enumeration limited to dimension <= 4".into(),
            ));
        }
        if self.empty {
            return Ok(vec![]);
        }
        let d = self.dim;
        let m = self.a.nrows();
        if m < d {
            return Err(Error::Input("vertices of an unbounded set".into()));
        }
        let mut verts: Vec<DVector<f64>> = Vec::new();
        let mut combo: Vec<usize> = (0..d).collect();
        loop {
            let mut sys = DMatrix::zeros(d, d);
            let mut rhs = DVector::zeros(d);
            for (r, &i) in combo.iter().enumerate() {
                sys.row_mut(r).copy_from(&self.a.row(i));
                rhs[r] = self.b[i];
            }
            let lu = sys.full_piv_lu();
            if let Some(x) = lu.solve(&rhs) {
                // Guard against near-singular combinations.
                let max_x = x.amax();
                if max_x.is_finite()
                    && max_x < CHEB_GUARD
                    && self.contains(&x, 1e-7)
                    && !verts.iter().any(|v| (v - &x).amax() < 1e-7)
                {
                    verts.push(x);
                }
            }
            // Next combination in lexicographic order.
            let mut k = d;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                if combo[k] < m - d + k {
                    combo[k] += 1;
                    for j in k + 1..d {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break;
                }
                if k == 0 {
                    // canonical order: lexicographic by rounded coordinates
                    verts.sort_by(|p, q| {
                        for j in 0..d {
                            let a = (p[j] / 1e-9).round();
                            let b = (q[j] / 1e-9).round();
                            if a != b {
                                return a.partial_cmp(&b).unwrap();
                            }
                        }
                        std::cmp::Ordering::Equal
                    });
                    return Ok(verts);
                }
            }
        }
    }

    /// Preimage `{x | M x + c in self}` under an affine map.
    pub fn preimage(&self, m: &DMatrix<f64>, c: &DVector<f64>) -> Result<Polytope> {
        if m.nrows() != self.dim || c.len() != self.dim {
            return Err(Error::Dimension("preimage: map shape".into()));
        }
        let mut rows = Vec::new();
        for i in 0..self.a.nrows() {
            let a = self.a.row(i).transpose();
            let new_a = m.transpose() * &a;
            let new_b = self.b[i] - a.dot(c);
            rows.push((new_a, new_b));
        }
        Polytope::from_rows(m.ncols(), &rows)
    }

    /// Cartesian product `self x other` in block coordinates.
    pub fn cartesian_product(&self, other: &Polytope) -> Polytope {
        let dim = self.dim + other.dim;
        let mut rows = Vec::new();
        for i in 0..self.a.nrows() {
            let mut a = DVector::zeros(dim);
            a.rows_mut(0, self.dim)
                .copy_from(&self.a.row(i).transpose());
            rows.push((a, self.b[i]));
        }
        for i in 0..other.a.nrows() {
            let mut a = DVector::zeros(dim);
            a.rows_mut(self.dim, other.dim)
                .copy_from(&other.a.row(i).transpose());
            rows.push((a, other.b[i]));
        }
        Polytope::from_rows(dim, &rows).expect("normalized inputs")
    }

    /// Slice with coordinates `fixed[k].0` pinned to `fixed[k].1`; the
    /// result lives in the remaining coordinates (original order).
    pub fn fix_coords(&self, fixed: &[(usize, f64)]) -> Result<Polytope> {
        let fixed_idx: Vec<usize> = fixed.iter().map(|(i, _)| *i).collect();
        let rest: Vec<usize> = (0..self.dim).filter(|i| !fixed_idx.contains(i)).collect();
        let mut rows = Vec::new();
        for i in 0..self.a.nrows() {
            let full = self.a.row(i).transpose();
            let mut shift = 0.0;
            for (idx, val) in fixed {
                shift += full[*idx] * val;
            }
            let a_rest = DVector::from_fn(rest.len(), |r, _| full[rest[r]]);
            rows.push((a_rest, self.b[i] - shift));
        }
        Polytope::from_rows(rest.len(), &rows)
    }

    /// Rounded, sorted row list for deduplication of identical regions.
    pub fn canonical_key(&self, tol: &Tolerances) -> Vec<Vec<i64>> {
        let scale = 1.0 / tol.dedup;
        let mut rows: Vec<Vec<i64>> = (0..self.a.nrows())
            .map(|i| {
                let mut v: Vec<i64> = self
                    .a
                    .row(i)
                    .iter()
                    .map(|x| (x * scale).round() as i64)
                    .collect();
                v.push((self.b[i] * scale).round() as i64);
                v
            })
            .collect();
        rows.sort();
        rows.dedup();
        rows
    }

    /// True when both irredundant descriptions match row-wise.
    pub fn same_set(&self, other: &Polytope, tol: &Tolerances) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let a = self.remove_redundancy(tol).canonical_key(tol);
        let b = other.remove_redundancy(tol).canonical_key(tol);
        a == b
    }

    /// Shared facet of two polytopes: present when one has a row that the
    /// other carries with opposite sign (the common separating hyperplane)
    /// and the intersection of the closures is nonempty. Contacts of lower
    /// dimension than a facet (edges, points) return None.
    pub fn shared_facet(&self, other: &Polytope, tol: &Tolerances) -> Result<Option<Polytope>> {
        if self.dim != other.dim {
            return Err(Error::Dimension("shared_facet: dimension mismatch".into()));
        }
        let mut found = false;
        'rows: for i in 0..self.a.nrows() {
            for j in 0..other.a.nrows() {
                let anti = (self.a.row(i).transpose() + other.a.row(j).transpose()).amax();
                let boff = (self.b[i] + other.b[j]).abs();
                if anti <= 1e-7 && boff <= 1e-7 {
                    found = true;
                    break 'rows;
                }
            }
        }
        if !found {
            return Ok(None);
        }
        let face = self.intersect(other, tol)?;
        if face.is_empty() {
            return Ok(None);
        }
        Ok(Some(face))
    }

    /// Containment `self subseteq other` by support LPs over `other`'s rows.
    pub fn is_subset_of(&self, other: &Polytope, tol: &Tolerances) -> Result<bool> {
        if self.empty {
            return Ok(true);
        }
        for i in 0..other.a.nrows() {
            let dir = other.a.row(i).transpose();
            let sup = self.support(&dir, tol)?;
            if sup > other.b[i] + tol.feas.max(1e-8) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn rows_of(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<(DVector<f64>, f64)> {
    (0..a.nrows())
        .map(|i| (a.row(i).transpose(), b[i]))
        .collect()
}

/// One Fourier-Motzkin elimination step on column `col`.
fn fm_eliminate(a: &DMatrix<f64>, b: &DVector<f64>, col: usize) -> (DMatrix<f64>, DVector<f64>) {
    let m = a.nrows();
    let keep_cols: Vec<usize> = (0..a.ncols()).filter(|&c| c != col).collect();
    let reduced = |i: usize| -> DVector<f64> {
        DVector::from_fn(keep_cols.len(), |r, _| a[(i, keep_cols[r])])
    };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..m {
        let c = a[(i, col)];
        if c > 1e-9 {
            pos.push(i);
        } else if c < -1e-9 {
            neg.push(i);
        } else {
            rows.push((reduced(i), b[i]));
        }
    }
    for &ip in &pos {
        for &ineg in &neg {
            let cp = a[(ip, col)];
            let cn = -a[(ineg, col)];
            // (row_p / cp) + (row_n / cn) eliminates the column.
            let combo = reduced(ip) / cp + reduced(ineg) / cn;
            let rhs = b[ip] / cp + b[ineg] / cn;
            rows.push((combo, rhs));
        }
    }
    let out_m = rows.len();
    let mut na = DMatrix::zeros(out_m, keep_cols.len());
    let mut nb = DVector::zeros(out_m);
    for (r, (v, rb)) in rows.into_iter().enumerate() {
        na.row_mut(r).copy_from(&v.transpose());
        nb[r] = rb;
    }
    (na, nb)
}

/// Chebyshev LP: maximize the inball radius. Returns (empty, center, radius).
fn chebyshev_data(a: &DMatrix<f64>, b: &DVector<f64>, dim: usize) -> (bool, DVector<f64>, f64) {
    let tol = Tolerances::default();
    let m = a.nrows();
    // Variables (c, r); rows a_i'c + r <= b_i plus guard box.
    let mut rows = DMatrix::zeros(m + 2 * dim + 1, dim + 1);
    let mut rhs = DVector::zeros(m + 2 * dim + 1);
    for i in 0..m {
        for j in 0..dim {
            rows[(i, j)] = a[(i, j)];
        }
        rows[(i, dim)] = 1.0;
        rhs[i] = b[i];
    }
    for j in 0..dim {
        rows[(m + 2 * j, j)] = 1.0;
        rhs[m + 2 * j] = CHEB_GUARD;
        rows[(m + 2 * j + 1, j)] = -1.0;
        rhs[m + 2 * j + 1] = CHEB_GUARD;
    }
    rows[(m + 2 * dim, dim)] = 1.0;
    rhs[m + 2 * dim] = CHEB_GUARD;
    let mut cost = DVector::zeros(dim + 1);
    cost[dim] = -1.0;
    let lp = LpProblem::new(cost, rows, rhs);
    match solve_lp(&lp, &tol) {
        Ok(SolveStatus::Optimal(s)) => {
            let r = s.x[dim];
            let c = s.x.rows(0, dim).clone_owned();
            (r < 0.0, c, r)
        }
        _ => (true, DVector::zeros(dim), f64::NEG_INFINITY),
    }
}

/// A polytopic partition: cells with pairwise-disjoint interiors whose
/// union covers the shared parent.
#[derive(Debug, Clone)]
pub struct Partition {
    pub cells: Vec<Polytope>,
    pub parent: Polytope,
}

impl Partition {
    pub fn new(cells: Vec<Polytope>, parent: Polytope) -> Self {
        Partition { cells, parent }
    }

    /// Pairwise interior-disjointness: the intersection of any two cells
    /// must have Chebyshev radius below the interior tolerance.
    pub fn check_disjoint(&self, tol: &Tolerances) -> Result<Vec<(usize, usize, f64)>> {
        let mut overlaps = Vec::new();
        for i in 0..self.cells.len() {
            for j in i + 1..self.cells.len() {
                let inter = self.cells[i].intersect(&self.cells[j], tol)?;
                let (_, r) = inter.chebyshev();
                if r >= tol.interior {
                    overlaps.push((i, j, r));
                }
            }
        }
        Ok(overlaps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn vec2(x: f64, y: f64) -> DVector<f64> {
        DVector::from_row_slice(&[x, y])
    }

    /// Terminal-set rows printed for the worked example; used widely in tests.
    pub fn example_xf() -> Polytope {
        Polytope::from_rows(
            2,
            &[
                (vec2(-0.9849, -0.3155), 2.1526),
                (vec2(0.9849, 0.3155), 2.1526),
                (vec2(0.4369, 0.8995), 0.7079),
                (vec2(-0.4369, -0.8995), 0.7079),
            ],
        )
        .unwrap()
    }

    #[test]
    fn box_support_values() {
        let t = tol();
        let small = Polytope::inf_box(2, 0.1);
        assert_abs_diff_eq!(small.support(&vec2(1.0, 0.0), &t).unwrap(), 0.1, epsilon = 1e-9);
        let big = Polytope::inf_box(2, 10.0);
        assert_abs_diff_eq!(big.support(&vec2(1.0, 1.0), &t).unwrap(), 20.0, epsilon = 1e-9);
        // Disturbance box from the worked example with an identity map row.
        let w = Polytope::inf_box(2, 0.1);
        assert_abs_diff_eq!(w.support(&vec2(1.0, 0.0), &t).unwrap(), 0.1, epsilon = 1e-9);
    }

    #[test]
    fn empty_and_chebyshev() {
        let t = tol();
        let empty = Polytope::from_rows(
            1,
            &[
                (DVector::from_row_slice(&[1.0]), -1.0),
                (DVector::from_row_slice(&[-1.0]), -1.0),
            ],
        )
        .unwrap();
        assert!(empty.is_empty());
        let cube = Polytope::inf_box(2, 1.0);
        let (c, r) = cube.chebyshev();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
        assert!(c.amax() < 1e-9);
        let _ = t;
    }

    #[test]
    fn intersect_box_halfplane() {
        let t = tol();
        let b = Polytope::inf_box(2, 10.0);
        let hp = Polytope::from_rows(2, &[(vec2(1.0, 0.0), 5.0)]).unwrap();
        let inter = b.intersect(&hp, &t).unwrap();
        assert_abs_diff_eq!(inter.support(&vec2(1.0, 0.0), &t).unwrap(), 5.0, epsilon = 1e-8);
        assert_abs_diff_eq!(inter.support(&vec2(-1.0, 0.0), &t).unwrap(), 10.0, epsilon = 1e-8);
        // Idempotence: p with itself keeps the same irredundant set.
        let again = inter.intersect(&inter, &t).unwrap();
        assert!(again.same_set(&inter, &t));
    }

    #[test]
    fn example_terminal_inside_state_box() {
        // Containment checked by support LPs row by row.
        let t = tol();
        let x = Polytope::inf_box(2, 10.0);
        let xf = example_xf();
        assert!(xf.is_subset_of(&x, &t).unwrap());
        let inter = x.intersect(&xf, &t).unwrap();
        assert!(inter.same_set(&xf, &t));
    }

    #[test]
    fn pontryagin_box_erosion() {
        let t = tol();
        let x = Polytope::inf_box(2, 10.0);
        let w = Polytope::inf_box(2, 0.1);
        let g = DMatrix::identity(2, 2);
        let eroded = x.pontryagin_difference(&g, &w, &t).unwrap();
        assert!(eroded.same_set(&Polytope::inf_box(2, 9.9), &t));
        // Erosion by a point leaves the set unchanged.
        let point = Polytope::from_rows(
            2,
            &[
                (vec2(1.0, 0.0), 0.0),
                (vec2(-1.0, 0.0), 0.0),
                (vec2(0.0, 1.0), 0.0),
                (vec2(0.0, -1.0), 0.0),
            ],
        )
        .unwrap();
        let same = x.pontryagin_difference(&g, &point, &t).unwrap();
        assert!(same.same_set(&x, &t));
    }

    #[test]
    fn pontryagin_example_facet_shrink() {
        // Offsets shrink by the support of W in each (unit) facet normal:
        // the support oracle value for the first facet is
        // 0.1 * (0.9849 + 0.3155) / ||(0.9849, 0.3155)||.
        let t = tol();
        let xf = example_xf();
        let w = Polytope::inf_box(2, 0.1);
        let g = DMatrix::identity(2, 2);
        let eroded = xf.pontryagin_difference(&g, &w, &t).unwrap();
        let norm = (0.9849f64.powi(2) + 0.3155f64.powi(2)).sqrt();
        let expected_shrink = 0.1 * (0.9849 + 0.3155) / norm;
        // Row order is preserved by construction here.
        let b0 = xf.offsets()[0];
        let e0 = eroded.offsets()[0];
        assert_abs_diff_eq!(b0 - e0, expected_shrink, epsilon = 1e-9);
    }

    #[test]
    fn projection_square_and_diagonal() {
        let t = tol();
        // Unit square in (x, u), keep x -> [0,1].
        let square = Polytope::from_bounds(
            &DVector::from_row_slice(&[0.0, 0.0]),
            &DVector::from_row_slice(&[1.0, 1.0]),
        )
        .unwrap();
        let proj = square.project(&[0], &t).unwrap();
        assert_abs_diff_eq!(proj.support(&DVector::from_row_slice(&[1.0]), &t).unwrap(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(proj.support(&DVector::from_row_slice(&[-1.0]), &t).unwrap(), 0.0, epsilon = 1e-8);
        // {(x,u) | u = x, -1 <= u <= 1} projects to [-1, 1].
        let diag = Polytope::from_rows(
            2,
            &[
                (vec2(1.0, -1.0), 0.0),
                (vec2(-1.0, 1.0), 0.0),
                (vec2(0.0, 1.0), 1.0),
                (vec2(0.0, -1.0), 1.0),
            ],
        )
        .unwrap();
        let proj = diag.project(&[0], &t).unwrap();
        assert_abs_diff_eq!(proj.support(&DVector::from_row_slice(&[1.0]), &t).unwrap(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(proj.support(&DVector::from_row_slice(&[-1.0]), &t).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn redundancy_removal() {
        let t = tol();
        // {x <= 1, x <= 2} -> {x <= 1}.
        let p = Polytope::from_rows(
            1,
            &[
                (DVector::from_row_slice(&[1.0]), 1.0),
                (DVector::from_row_slice(&[1.0]), 2.0),
                (DVector::from_row_slice(&[-1.0]), 0.0),
            ],
        )
        .unwrap();
        let r = p.remove_redundancy(&t);
        assert_eq!(r.num_rows(), 2);
        // Irredundant set is a fixed point.
        let r2 = r.remove_redundancy(&t);
        assert!(r.same_set(&r2, &t));
    }

    #[test]
    fn redundant_cuts_dominated_by_corners() {
        let t = tol();
        let b = Polytope::inf_box(2, 1.0);
        // Cuts a'x <= c with c > |a|_1 are dominated by the box corners.
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut rows = Vec::new();
        for i in 0..b.num_rows() {
            rows.push((b.row_matrix().row(i).transpose(), b.offsets()[i]));
        }
        for _ in 0..10 {
            let a = vec2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if a.norm() < 0.1 {
                continue;
            }
            let slack: f64 = rng.gen_range(0.01..1.0);
            let c = a.abs().sum() + slack;
            rows.push((a, c));
        }
        let fat = Polytope::from_rows(2, &rows).unwrap();
        let slim = fat.remove_redundancy(&t);
        assert!(slim.same_set(&b, &t));
        assert_eq!(slim.num_rows(), 4);
    }

    #[test]
    fn vertices_of_example_terminal_set() {
        let t = tol();
        let xf = example_xf();
        let verts = xf.vertices(&t).unwrap();
        assert_eq!(verts.len(), 4);
        for v in &verts {
            let mut tight = 0;
            for i in 0..xf.num_rows() {
                let g = xf.row_matrix().row(i).transpose().dot(v) - xf.offsets()[i];
                assert!(g <= 1e-7);
                if g.abs() <= 1e-7 {
                    tight += 1;
                }
            }
            assert_eq!(tight, 2);
        }
    }

    #[test]
    fn vertices_unsupported_above_dim_4() {
        let t = tol();
        let p = Polytope::inf_box(5, 1.0);
        assert!(matches!(p.vertices(&t), Err(Error::Unsupported(_))));
    }

    #[test]
    fn fix_coords_slices() {
        let t = tol();
        let square = Polytope::inf_box(2, 1.0);
        let slice = square.fix_coords(&[(0, 0.5)]).unwrap();
        assert_eq!(slice.dim(), 1);
        assert!(!slice.is_empty());
        let gone = square.fix_coords(&[(0, 2.0)]).unwrap();
        assert!(gone.is_empty());
        let _ = t;
    }
}
