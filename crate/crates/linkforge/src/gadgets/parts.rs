//! Building blocks shared by the gadget constructors.

use std::collections::BTreeMap;

use super::functional::{GadgetError, Placement};
use crate::geom::{basis, Point};
use crate::linkage::{Linkage, LinkageError, VertexId};

pub(crate) const SQRT2: f64 = std::f64::consts::SQRT_2;

pub(crate) fn positive(name: &str, x: f64) -> Result<(), GadgetError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(GadgetError::BadParameter(format!("{name} must be positive, got {x}")))
    }
}

pub(crate) fn check_dim(n: usize, p: &Point) -> Result<(), GadgetError> {
    if p.len() != n {
        return Err(GadgetError::Linkage(LinkageError::DimMismatch { expected: n, got: p.len() }));
    }
    Ok(())
}

/// Fixed vertices deduplicated by exact position.
#[derive(Default)]
pub(crate) struct Anchors {
    by_point: BTreeMap<Vec<u64>, VertexId>,
}

impl Anchors {
    pub fn get(&mut self, l: &mut Linkage, p: Point) -> Result<VertexId, GadgetError> {
        let key: Vec<u64> = p.iter().map(|x| (x + 0.0).to_bits()).collect();
        if let Some(&v) = self.by_point.get(&key) {
            return Ok(v);
        }
        let v = l.add_fixed(None, p)?;
        self.by_point.insert(key, v);
        Ok(v)
    }
}

/// Constrain `v` to the round sphere about `center` (a fixed vertex at `c`)
/// of radius `r` lying in the coordinate subspace spanned by `keep` (offset by c).
pub(crate) fn add_sphere_constraint(
    l: &mut Linkage,
    anchors: &mut Anchors,
    center: VertexId,
    c: &Point,
    v: VertexId,
    r: f64,
    keep: &[usize],
) -> Result<(), GadgetError> {
    let n = l.dim();
    l.rigid(center, v, r)?;
    for k in 0..n {
        if keep.contains(&k) {
            continue;
        }
        let a = anchors.get(l, c + basis(n, k) * r)?;
        l.rigid(a, v, SQRT2 * r)?;
    }
    Ok(())
}

/// Rigidified parallelogram on existing vertices P,Q,R,S with |PQ|=|RS|=a,
/// |PR|=|QS|=b, forcing P+S=Q+R. Returns the midpoint vertices of PQ and RS.
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_parallelogram(
    l: &mut Linkage,
    p: VertexId,
    q: VertexId,
    r: VertexId,
    s: VertexId,
    a: f64,
    b: f64,
) -> Result<(VertexId, VertexId), GadgetError> {
    l.rigid(p, q, a)?;
    l.rigid(r, s, a)?;
    l.rigid(p, r, b)?;
    l.rigid(q, s, b)?;
    let e = l.add_vertex();
    let f = l.add_vertex();
    l.rigid(p, e, a / 2.0)?;
    l.rigid(q, e, a / 2.0)?;
    l.rigid(r, f, a / 2.0)?;
    l.rigid(s, f, a / 2.0)?;
    l.rigid(e, f, b)?;
    Ok((e, f))
}

pub(crate) fn put_midpoints(out: &mut Placement<'_>, mids: (VertexId, VertexId), p: &Point, q: &Point, r: &Point, s: &Point) {
    out.put(mids.0, &p.zip_map(q, |a, b| (a + b) * 0.5));
    out.put(mids.1, &r.zip_map(s, |a, b| (a + b) * 0.5));
}

/// Rotate the x1x2 part of `v` by +90 degrees (other coordinates dropped).
pub(crate) fn rot90(v: &Point) -> Point {
    let mut out = Point::zeros(v.len());
    out[0] = -v[1];
    out[1] = v[0];
    out
}

/// Rotate the x1x2 part of `v` by -90 degrees.
pub(crate) fn rot_neg90(v: &Point) -> Point {
    let mut out = Point::zeros(v.len());
    out[0] = v[1];
    out[1] = -v[0];
    out
}

/// Position of the circle vertex of a basic linkage: the circle has center
/// `z1`, radius `a`, lies in the x1x2 plane through z1, and the arm of length `b`
/// ends at `target`. Sheet `false` picks the solution on the side of
/// w0 = rot(-90°)·w0p; `true` the mirror one.
pub(crate) fn solve_basic(z1: &Point, a: f64, b: f64, w0p: &Point, target: &Point, flip: bool) -> Result<Point, GadgetError> {
    let q = target - z1;
    let mut qp = Point::zeros(q.len());
    qp[0] = q[0];
    qp[1] = q[1];
    let rho = qp.norm();
    if rho < 1e-300 {
        return Err(GadgetError::OutOfDomain("basic linkage target on the circle axis".into()));
    }
    let kappa = (a * a + q.norm_squared() - b * b) / (2.0 * a);
    let ratio = kappa / rho;
    let s2 = 1.0 - ratio * ratio;
    if s2 < -1e-9 {
        return Err(GadgetError::OutOfDomain("outside the basic linkage's solid torus".into()));
    }
    let s = s2.max(0.0).sqrt();
    let qh = &qp / rho;
    let perp = rot90(&qh);
    // the mirror pair about the line through q; choose by side of w0
    let u0 = &qh * ratio - &perp * s;
    let u1 = &qh * ratio + &perp * s;
    let w0 = rot_neg90(w0p);
    let (first, second) = if u0.dot(&w0) >= u1.dot(&w0) { (u0, u1) } else { (u1, u0) };
    let u = if flip { second } else { first };
    Ok(z1 + u * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point;

    #[test]
    fn basic_solution_hits_both_constraints() {
        let z1 = point(&[0.5, -1.0, 0.2]);
        let w0p = point(&[0.0, 1.0, 0.0]);
        let target = &z1 + point(&[0.3, 1.9, 0.4]);
        for flip in [false, true] {
            let b = solve_basic(&z1, 2.0, 1.2, &w0p, &target, flip).unwrap();
            assert!(((&b - &z1).norm() - 2.0).abs() < 1e-12);
            assert!((b[2] - z1[2]).abs() < 1e-15);
            assert!(((&b - &target).norm() - 1.2).abs() < 1e-12);
        }
        let b0 = solve_basic(&z1, 2.0, 1.2, &w0p, &target, false).unwrap();
        // w0 = e1: sheet 0 lies on the +x1 side
        assert!(b0[0] - z1[0] > 0.0);
    }
}
