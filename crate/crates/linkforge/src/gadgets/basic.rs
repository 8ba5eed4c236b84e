//! Rigidified parallelogram, sphere linkages, the basic linkage and the pantograph.

use std::sync::Arc;

use super::domain::Domain;
use super::functional::{FunctionalLinkage, GadgetError, GadgetKind, PlaceFn};
use super::parts::{add_parallelogram, add_sphere_constraint, check_dim, positive, rot_neg90, solve_basic, Anchors, SQRT2};
use crate::geom::{basis, zero, Point};
use crate::linkage::{Linkage, VertexId};

/// The six-vertex, nine-edge rigidified parallelogram.
#[derive(Debug, Clone)]
pub struct RigidParallelogram {
    pub linkage: Linkage,
    pub a: VertexId,
    pub b: VertexId,
    pub c: VertexId,
    pub d: VertexId,
    pub e: VertexId,
    pub f: VertexId,
}

/// |AB| = |CD| = a, |AC| = |BD| = |EF| = b, E and F midpoints of AB and CD.
pub fn mk_rigid_parallelogram(a: f64, b: f64, n: usize) -> Result<RigidParallelogram, GadgetError> {
    positive("a", a)?;
    positive("b", b)?;
    let mut l = Linkage::new(n)?;
    let va = l.add_labeled("A");
    let vb = l.add_labeled("B");
    let vc = l.add_labeled("C");
    let vd = l.add_labeled("D");
    let (e, f) = add_parallelogram(&mut l, va, vb, vc, vd, a, b)?;
    l.set_label(e, Some("E".into()))?;
    l.set_label(f, Some("F".into()))?;
    Ok(RigidParallelogram { linkage: l, a: va, b: vb, c: vc, d: vd, e, f })
}

/// Linkage whose single free vertex traces the k-sphere
/// {x : x_i = 0 for i ≤ n-k-1, |x| = r}.
pub fn mk_sphere(n: usize, k: usize, r: f64) -> Result<FunctionalLinkage, GadgetError> {
    positive("r", r)?;
    if k + 1 > n {
        return Err(GadgetError::BadParameter(format!("sphere dimension {k} must be below {n}")));
    }
    let mut l = Linkage::new(n)?;
    let v = l.add_labeled("v");
    let o = l.add_fixed(Some("v0"), zero(n))?;
    l.rigid(o, v, r)?;
    let cut = n - k - 1;
    let mut normals = Vec::new();
    for i in 0..cut {
        let a = l.add_fixed(Some(&format!("v{}", i + 1)), basis(n, i) * r)?;
        l.rigid(a, v, SQRT2 * r)?;
        normals.push(basis(n, i).as_slice().to_vec());
    }
    let domain = Domain::Sphere { center: vec![0.0; n], radius: r, normals };
    let place: Arc<PlaceFn> = Arc::new(move |x, _bits, out| {
        out.put(v, &x[0]);
        Ok(vec![x[0].clone()])
    });
    Ok(FunctionalLinkage::from_parts("sphere", l, vec![], vec![v], domain, GadgetKind::Set, 0, place, Arc::new(|x| x.to_vec())))
}

/// Circle-plus-arm sublinkage: `circ` moves on the circle of radius `a` about
/// the fixed `center` (at z1) in the x1x2 plane, `arm` hangs at distance `b`.
/// With `strong = Some(d)` the circle vertex is tethered to z1 + a·w0 with
/// length √2·a and the arm end to z1 + a·w0p with length d.
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_basic(
    l: &mut Linkage,
    anchors: &mut Anchors,
    center: VertexId,
    z1: &Point,
    circ: VertexId,
    arm: VertexId,
    a: f64,
    b: f64,
    w0p: &Point,
    strong: Option<f64>,
) -> Result<(), GadgetError> {
    add_sphere_constraint(l, anchors, center, z1, circ, a, &[0, 1])?;
    l.rigid(circ, arm, b)?;
    if let Some(d) = strong {
        let w0 = rot_neg90(w0p);
        l.tether_mut(circ, z1 + &w0 * a, SQRT2 * a)?;
        l.tether_mut(arm, z1 + w0p * a, d)?;
    }
    Ok(())
}

pub(crate) fn unit_in_plane(w: &Point) -> Result<Point, GadgetError> {
    let mut u = Point::zeros(w.len());
    u[0] = w[0];
    u[1] = w[1];
    let nu = u.norm();
    if nu < 1e-12 || (w.norm() - nu).abs() > 1e-12 * w.norm() {
        return Err(GadgetError::BadParameter("direction must lie in the x1x2 plane".into()));
    }
    Ok(u / nu)
}

/// Basic linkage with the disc direction w0' = e2 and disc radius b/2.
pub fn mk_basic(n: usize, z1: &Point, a: f64, b: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    mk_basic_with(n, z1, a, b, &basis(n, 1), b / 2.0, strong)
}

/// Basic linkage; the parameter is the position of C over the disc of radius
/// `d` about z1 + a·w0p.
pub fn mk_basic_with(
    n: usize,
    z1: &Point,
    a: f64,
    b: f64,
    w0p: &Point,
    d: f64,
    strong: bool,
) -> Result<FunctionalLinkage, GadgetError> {
    positive("a", a)?;
    positive("b", b)?;
    positive("d", d)?;
    check_dim(n, z1)?;
    if b > a {
        return Err(GadgetError::BadParameter(format!("arm b={b} exceeds radius a={a}")));
    }
    if d >= b {
        return Err(GadgetError::BadParameter(format!("disc radius d={d} must be below b={b}")));
    }
    let w0p = unit_in_plane(w0p)?;
    let mut l = Linkage::new(n)?;
    let mut anchors = Anchors::default();
    let va = l.add_fixed(Some("A"), z1.clone())?;
    let vb = l.add_labeled("B");
    let vc = l.add_labeled("C");
    add_basic(&mut l, &mut anchors, va, z1, vb, vc, a, b, &w0p, strong.then_some(d))?;
    let center = z1 + &w0p * a;
    let domain = Domain::ball(&center, d);
    let (z, w) = (z1.clone(), w0p.clone());
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let flip = bits.first().copied().unwrap_or(false);
        let bpos = solve_basic(&z, a, b, &w, &x[0], flip)?;
        out.put(vb, &bpos);
        out.put(vc, &x[0]);
        Ok(vec![x[0].clone()])
    });
    let bits = if strong { 0 } else { 1 };
    let fl = FunctionalLinkage::from_parts("basic", l, vec![], vec![vc], domain.clone(), GadgetKind::Set, bits, place, Arc::new(|x| x.to_vec()));
    Ok(fl.with_image(domain))
}

/// The pantograph: C - A = (1+c)(B - A) in every realization.
#[derive(Debug, Clone)]
pub struct Pantograph {
    pub linkage: Linkage,
    pub a: VertexId,
    pub b: VertexId,
    pub c: VertexId,
    pub d: VertexId,
    pub e: VertexId,
    pub f: VertexId,
    /// Midpoint vertices of the rigidified parallelogram (of ED and BF).
    pub mids: (VertexId, VertexId),
    pub ratio: f64,
    pub arm_a: f64,
    pub arm_b: f64,
}

pub fn mk_pantograph(n: usize, c: f64, a: f64, b: f64) -> Result<Pantograph, GadgetError> {
    positive("c", c)?;
    positive("a", a)?;
    positive("b", b)?;
    let mut l = Linkage::new(n)?;
    let va = l.add_labeled("A");
    let vb = l.add_labeled("B");
    let vc = l.add_labeled("C");
    let vd = l.add_labeled("D");
    let ve = l.add_labeled("E");
    let vf = l.add_labeled("F");
    // cyclic E, D, F, B with |ED| = |FB| = c·a and |DF| = |BE| = b
    let mids = add_parallelogram(&mut l, ve, vd, vb, vf, c * a, b)?;
    l.rigid(va, ve, a)?;
    l.rigid(va, vd, a + c * a)?;
    l.rigid(vf, vc, c * b)?;
    l.rigid(vc, vd, b + c * b)?;
    Ok(Pantograph { linkage: l, a: va, b: vb, c: vc, d: vd, e: ve, f: vf, mids, ratio: c, arm_a: a, arm_b: b })
}

impl Pantograph {
    /// All positions from A, the unit direction u of A→E, and the unit arm direction v of E→B.
    pub(crate) fn positions(&self, pa: &Point, u: &Point, v: &Point) -> PantographPositions {
        let (c, a, b) = (self.ratio, self.arm_a, self.arm_b);
        let e = pa + u * a;
        let d = pa + u * ((1.0 + c) * a);
        let bb = &e + v * b;
        let f = &d + v * b;
        let cc = &d + v * ((1.0 + c) * b);
        PantographPositions { a: pa.clone(), b: bb, c: cc, d, e, f }
    }

    pub(crate) fn place(&self, out: &mut super::functional::Placement<'_>, p: &PantographPositions) {
        out.put(self.a, &p.a);
        out.put(self.b, &p.b);
        out.put(self.c, &p.c);
        out.put(self.d, &p.d);
        out.put(self.e, &p.e);
        out.put(self.f, &p.f);
        out.put(self.mids.0, &((&p.e + &p.d) * 0.5));
        out.put(self.mids.1, &((&p.b + &p.f) * 0.5));
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PantographPositions {
    pub a: Point,
    pub b: Point,
    pub c: Point,
    pub d: Point,
    pub e: Point,
    pub f: Point,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point;
    use crate::linkage::Realization;

    #[test]
    fn parallelogram_square_placement() {
        let p = mk_rigid_parallelogram(1.0, 1.0, 2).unwrap();
        assert_eq!(p.linkage.vertex_count(), 6);
        assert_eq!(p.linkage.edge_count(), 9);
        let mut phi = Realization::for_linkage(&p.linkage);
        phi.set(p.a, &[0.0, 0.0]);
        phi.set(p.b, &[1.0, 0.0]);
        phi.set(p.c, &[0.0, 1.0]);
        phi.set(p.d, &[1.0, 1.0]);
        phi.set(p.e, &[0.5, 0.0]);
        phi.set(p.f, &[0.5, 1.0]);
        assert!(p.linkage.residuals(&phi).unwrap().iter().all(|&r| r == 0.0));
        assert!(mk_rigid_parallelogram(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn sphere_examples() {
        let r = 1.5;
        let s = mk_sphere(3, 1, r).unwrap();
        let v = s.outputs[0];
        let mut phi = s.forward(&[point(&[0.0, 0.0, r])], 0).unwrap();
        assert!(s.linkage.max_residual(&phi).unwrap() < 1e-15);
        phi.set(v, &[r, 0.0, 0.0]);
        // |v - r e1| = 0 against the √2·r edge
        let res = s.linkage.residuals(&phi).unwrap();
        let worst = res.iter().cloned().fold(0.0, f64::max);
        assert!((worst - SQRT2 * r).abs() < 1e-12);
        assert!(!s.linkage.is_realization(&phi, 1e-9).unwrap());
        let full = mk_sphere(3, 2, r).unwrap();
        assert_eq!(full.linkage.fixed().len(), 1);
        assert!(mk_sphere(3, 3, r).is_err());
    }

    #[test]
    fn basic_parameterization() {
        let z1 = point(&[0.0, 0.0, 0.0]);
        let (a, b) = (2.0, 1.0);
        let bl = mk_basic(3, &z1, a, b, false).unwrap();
        // phi_uv with u = e1, v = e2
        let mut phi = Realization::for_linkage(&bl.linkage);
        for (&v, p) in bl.linkage.fixed() {
            phi.set_point(v, p);
        }
        phi.set(bl.vertex("B").unwrap(), &[a, 0.0, 0.0]);
        phi.set(bl.vertex("C").unwrap(), &[a, b, 0.0]);
        assert!(bl.linkage.is_realization(&phi, 1e-12).unwrap());
        assert!(mk_basic(3, &z1, 1.0, 2.0, false).is_err());
    }

    #[test]
    fn pantograph_unit_ratio() {
        let p = mk_pantograph(3, 1.0, 1.0, 0.7).unwrap();
        let u = point(&[0.6, 0.8, 0.0]);
        let v = point(&[0.0, 0.0, 1.0]);
        let pos = p.positions(&point(&[0.0, 0.0, 0.0]), &u, &v);
        let mut phi = Realization::for_linkage(&p.linkage);
        {
            let mut out = super::super::functional::Placement::new(&mut phi);
            p.place(&mut out, &pos);
        }
        assert!(p.linkage.max_residual(&phi).unwrap() < 1e-15);
        assert!((&pos.c - &pos.b * 2.0).norm() < 1e-15);
        assert!(mk_pantograph(3, 0.0, 1.0, 1.0).is_err());
    }
}
