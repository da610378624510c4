//! Seeded random sampling on polytopes: rejection from the bounding box,
//! hit-and-run interior walks, and point generation on (possibly
//! lower-dimensional) faces via support LPs.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::Polytope;

/// Uniform sample by rejection from the bounding box. Falls back to a
/// hit-and-run walk when the set is too thin for rejection to land.
pub fn sample_point(p: &Polytope, rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<DVector<f64>> {
    if p.is_empty() {
        return Err(Error::Infeasible("sampling an empty polytope".into()));
    }
    let (lo, hi) = p.bounding_box(tol)?;
    for _ in 0..200 {
        let x = DVector::from_fn(p.dim(), |j, _| rng.gen_range(0.0..1.0) * (hi[j] - lo[j]) + lo[j]);
        if p.contains(&x, tol.feas) {
            return Ok(x);
        }
    }
    // Thin set: walk from the Chebyshev center instead.
    let mut pts = interior_points(p, rng, 1, tol)?;
    Ok(pts.pop().unwrap())
}

/// `count` uniform-ish samples (rejection; hit-and-run fallback).
pub fn sample_points(
    p: &Polytope,
    rng: &mut ChaCha8Rng,
    count: usize,
    tol: &Tolerances,
) -> Result<Vec<DVector<f64>>> {
    (0..count).map(|_| sample_point(p, rng, tol)).collect()
}

/// Points in the interior produced by a hit-and-run walk from the
/// Chebyshev center, stepping 90% of the way to the boundary.
pub fn interior_points(
    p: &Polytope,
    rng: &mut ChaCha8Rng,
    count: usize,
    tol: &Tolerances,
) -> Result<Vec<DVector<f64>>> {
    if p.is_empty() {
        return Err(Error::Infeasible("sampling an empty polytope".into()));
    }
    let (center, radius) = p.chebyshev();
    if radius <= 0.0 {
        return Err(Error::Infeasible("no interior to sample".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut x = center;
    for _ in 0..count {
        // One hit-and-run step: random direction, random point on 90% of
        // the feasible chord.
        let dir = random_direction(p.dim(), rng);
        let (t_lo, t_hi) = chord(p, &x, &dir);
        if t_hi - t_lo > 1e-12 {
            let t = t_lo + (t_hi - t_lo) * (0.05 + 0.9 * rng.gen_range(0.0..1.0));
            x += dir * t;
        }
        out.push(x.clone());
    }
    let _ = tol;
    Ok(out)
}

/// Feasible parameter interval of `x + t d` inside the polytope.
fn chord(p: &Polytope, x: &DVector<f64>, d: &DVector<f64>) -> (f64, f64) {
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    let a = p.row_matrix();
    let b = p.offsets();
    for i in 0..a.nrows() {
        let ad = a.row(i).transpose().dot(d);
        let slack = b[i] - a.row(i).transpose().dot(x);
        if ad > 1e-12 {
            t_hi = t_hi.min(slack / ad);
        } else if ad < -1e-12 {
            t_lo = t_lo.max(slack / ad);
        }
    }
    if !t_lo.is_finite() {
        t_lo = -1e6;
    }
    if !t_hi.is_finite() {
        t_hi = 1e6;
    }
    (t_lo, t_hi)
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Sample points on a face (a possibly lower-dimensional polytope):
/// support points in random directions plus random convex combinations.
/// Works in any dimension because it only solves LPs.
pub fn face_points(
    face: &Polytope,
    rng: &mut ChaCha8Rng,
    count: usize,
    tol: &Tolerances,
) -> Result<Vec<DVector<f64>>> {
    if face.is_empty() {
        return Ok(vec![]);
    }
    let mut extremes = Vec::new();
    let probes = count.max(4);
    for _ in 0..probes {
        let dir = random_direction(face.dim(), rng);
        if let Ok(pt) = face.support_point(&dir, tol) {
            extremes.push(pt);
        }
    }
    let (center, _) = face.chebyshev();
    extremes.push(center);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let i = rng.gen_range(0..extremes.len());
        let j = rng.gen_range(0..extremes.len());
        let lam: f64 = rng.gen_range(0.0..1.0);
        out.push(&extremes[i] * lam + &extremes[j] * (1.0 - lam));
    }
    Ok(out)
}

/// Monte-Carlo partition coverage: fraction of parent samples landing in
/// at least one cell.
pub fn coverage_fraction(
    cells: &[Polytope],
    parent: &Polytope,
    rng: &mut ChaCha8Rng,
    samples: usize,
    tol: &Tolerances,
) -> Result<f64> {
    if parent.is_empty() {
        return Ok(1.0);
    }
    let mut hit = 0usize;
    for _ in 0..samples {
        let x = sample_point(parent, rng, tol)?;
        if cells.iter().any(|c| c.contains(&x, tol.feas)) {
            hit += 1;
        }
    }
    Ok(hit as f64 / samples as f64)
}
